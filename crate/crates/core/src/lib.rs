//! Finite measured groupoids and their operator algebras, at a scale where
//! every analytic identity is a checkable matrix identity.
//!
//! The crate builds finite groupoids (groups, equivalence relations,
//! actions) carrying a full-support rational unit weight, realizes their
//! convolution *-algebra and the left regular representation as per-fibre
//! matrices, and verifies the constructive machinery around them:
//! positive definite and conditionally negative definite functions, GNS
//! data, completely positive multipliers and their Stinespring dilations,
//! module bases and the canonical trace, treeing-derived length functions
//! and the staged witnesses they induce, and amenability coefficients.
//!
//! Weights, the Radon-Nikodym cocycle, and set masses are exact rationals;
//! spectra and residuals are double precision with explicit tolerances.

pub mod algebra;
pub mod amenability;
pub mod fixtures;
pub mod gns;
pub mod groupoid;
pub mod gspec;
pub mod numeric;
pub mod posdef;
pub mod report;
pub mod sample;
pub mod suites;
pub mod treeing;
pub mod vnalg;

pub use algebra::{regular_rep, right_convolve, ArrowFunction, FibreOperator, FibreSide};
pub use groupoid::{
    bisection_partition, build_action_groupoid, build_equivalence, build_group, measures,
    orbit_and_isotropy, reduction, ArrowMeasure, Bisection, FiniteGroupoid, GroupoidSpec,
};
pub use posdef::{
    cnd_from_pd_sequence, extend_by_zero, is_cnd, is_positive_definite, properness_profile,
    schoenberg,
};
pub use report::{CheckReport, Status};

/// Default tolerance for algebraic identities.
pub const TOL_ALGEBRAIC: f64 = 1e-10;
/// Default tolerance for spectral assertions (eigenvalue solvers).
pub const TOL_SPECTRAL: f64 = 1e-8;

/// Tolerance pair threaded through the check suites.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub algebraic: f64,
    pub spectral: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { algebraic: TOL_ALGEBRAIC, spectral: TOL_SPECTRAL }
    }
}
