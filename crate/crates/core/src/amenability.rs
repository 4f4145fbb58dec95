//! Amenability witnesses: fields of unit vectors on the range fibres, their
//! coefficient functions under the fibrewise shift, the Gram-block operator
//! of a positive definite function, and the square-root extraction showing
//! every such function is a coefficient.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{ArrowFunction, FibreOperator};
use crate::groupoid::{measures, FiniteGroupoid};
use crate::numeric;
use crate::posdef::{is_positive_definite, range_gram};

#[derive(Debug, Error)]
pub enum AmenError {
    #[error("field is not normalized on the fibre at {unit} (norm^2 = {norm_sq})")]
    NotNormalized { unit: String, norm_sq: f64 },
    #[error("function is not positive definite")]
    NotPositiveDefinite,
    #[error("Gram block at {unit} has eigenvalue {eig:.3e} below the clamp window")]
    NotPsd { unit: String, eig: f64 },
}

/// A field whose restriction to every range fibre is a unit vector.
#[derive(Debug, Clone)]
pub struct UnitField {
    xi: ArrowFunction,
}

impl UnitField {
    pub fn new(xi: ArrowFunction) -> Result<Self, AmenError> {
        let g = xi.groupoid();
        for x in g.units() {
            let norm_sq: f64 = g.range_fibre(x).iter().map(|&a| xi.value(a).norm_sqr()).sum();
            if (norm_sq - 1.0).abs() > 1e-10 {
                return Err(AmenError::NotNormalized {
                    unit: g.unit_id(x).to_string(),
                    norm_sq,
                });
            }
        }
        Ok(UnitField { xi })
    }

    pub fn function(&self) -> &ArrowFunction {
        &self.xi
    }

    pub fn groupoid(&self) -> &Arc<FiniteGroupoid> {
        self.xi.groupoid()
    }

    /// Entrywise absolute value, renormalized; changes the coefficient in
    /// general and is therefore opt-in.
    pub fn nonnegative_version(&self) -> UnitField {
        let g = self.groupoid();
        let mut xi = self.xi.map(|v| Complex64::new(v.norm(), 0.0));
        for x in g.units() {
            let norm: f64 =
                g.range_fibre(x).iter().map(|&a| xi.value(a).norm_sqr()).sum::<f64>().sqrt();
            for &a in g.range_fibre(x) {
                xi.set(a, xi.value(a) / norm);
            }
        }
        UnitField { xi }
    }
}

/// Coefficient of the fibrewise shift along a unit field:
/// F(a) = sum over c in G^{r(a)} of conj(xi(c)) xi(a^{-1} c).
/// Positive definite with F|_X = 1.
pub fn coefficient_of_regular(field: &UnitField) -> ArrowFunction {
    let g = field.groupoid();
    let xi = &field.xi;
    let mut f = ArrowFunction::zero(g);
    for a in g.arrows() {
        let mut acc = Complex64::ZERO;
        for &c in g.range_fibre(g.range(a)) {
            let shifted = g.compose(g.inverse(a), c).expect("same range fibre");
            acc += xi.value(c).conj() * xi.value(shifted);
        }
        f.set(a, acc);
    }
    f
}

/// The Gram-block operator of a function on the range fibres:
/// (rho(F) xi)(a) = sum over c in G^{r(a)} of F(a^{-1} c) xi(c).
/// Positive exactly when F is positive definite.
pub fn rho_operator(f: &ArrowFunction) -> FibreOperator {
    range_gram(f)
}

/// Extract a unit field with coefficient F from a positive definite F with
/// F|_X = 1, as the square root of the Gram blocks applied to the unit
/// indicator.
pub fn xi_from_pd(f: &ArrowFunction, tol: f64) -> Result<UnitField, AmenError> {
    let g = f.groupoid();
    if !is_positive_definite(f, tol).is_pd {
        return Err(AmenError::NotPositiveDefinite);
    }
    let rho = rho_operator(f);
    let mut xi = ArrowFunction::zero(g);
    for x in g.units() {
        let block = rho.block(x);
        let scale = f64::max(1.0, numeric::inf_norm(block));
        let root = numeric::psd_sqrt(block, tol * scale).map_err(|eig| AmenError::NotPsd {
            unit: g.unit_id(x).to_string(),
            eig,
        })?;
        let fibre = g.range_fibre(x);
        let pos = fibre.iter().position(|&a| a == g.unit_arrow(x)).expect("unit in fibre");
        let e = DVector::from_fn(fibre.len(), |i, _| {
            if i == pos {
                Complex64::ONE
            } else {
                Complex64::ZERO
            }
        });
        let v = root * e;
        for (i, &a) in fibre.iter().enumerate() {
            xi.set(a, v[i]);
        }
    }
    UnitField::new(xi)
}

/// Per-stage summary of an amenability witness sequence.
#[derive(Debug, Clone)]
pub struct AmenStage {
    /// sup over arrows of |1 - F_n|; the finite substitute for weak*
    /// convergence.
    pub max_deviation: f64,
    /// Largest support count over range fibres.
    pub range_support_bound: usize,
    /// Largest support count over source fibres.
    pub source_support_bound: usize,
}

/// Check a sequence of unit fields as an amenability witness: compute each
/// coefficient, report its sup deviation from 1 and its bounded-support
/// profile.
pub fn amenability_witness_check(fields: &[UnitField], support_tol: f64) -> Vec<AmenStage> {
    fields
        .iter()
        .map(|field| {
            let g = field.groupoid();
            let f = coefficient_of_regular(field);
            let max_deviation = g
                .arrows()
                .map(|a| (f.value(a) - Complex64::ONE).norm())
                .fold(0.0_f64, f64::max);
            let range_support_bound = g
                .units()
                .map(|x| {
                    g.range_fibre(x).iter().filter(|&&a| f.value(a).norm() > support_tol).count()
                })
                .max()
                .unwrap_or(0);
            let source_support_bound = g
                .units()
                .map(|x| {
                    g.source_fibre(x).iter().filter(|&&a| f.value(a).norm() > support_tol).count()
                })
                .max()
                .unwrap_or(0);
            AmenStage { max_deviation, range_support_bound, source_support_bound }
        })
        .collect()
}

/// The intertwining field xi -> delta^{1/2} xi between the two weightings
/// of the fibre picture; an exact isometry from the inverted weighting to
/// the standard one.
pub fn hahn_intertwiner(xi: &ArrowFunction) -> ArrowFunction {
    let g = xi.groupoid();
    let m = measures(g);
    let values = g.arrows().map(|a| xi.value(a) * m.delta_f64(a).sqrt()).collect();
    ArrowFunction::from_values(g, values)
}

/// nu^{-1}-weighted squared norm, the domain-side norm of the intertwiner.
pub fn nu_inv_norm_sq(xi: &ArrowFunction) -> f64 {
    let g = xi.groupoid();
    g.arrows().map(|a| xi.value(a).norm_sqr() * g.mass_f64(g.range(a))).sum()
}
