//! Representations of a finite groupoid on fields of Hilbert spaces,
//! the GNS construction turning a positive definite function into a
//! representation with a distinguished unit section, coefficients, and
//! cocycles with their squared-norm transform.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::ArrowFunction;
use crate::groupoid::{ArrowIx, FiniteGroupoid, UnitIx};
use crate::numeric;
use crate::posdef::{is_positive_definite, range_gram};

#[derive(Debug, Error)]
pub enum GnsError {
    #[error("function is not positive definite")]
    NotPositiveDefinite,
    #[error("function is not 1 on unit arrows (defect {0:.3e})")]
    UnitValueNotOne(f64),
    #[error("section shape does not match the representation")]
    ShapeMismatch,
    #[error("cocycle violates its defining law (defect {0:.3e})")]
    CocycleLaw(f64),
}

/// A field of finite-dimensional Hilbert spaces over the units together
/// with arrow-indexed unitary isomorphisms pi(a): H(s(a)) -> H(r(a)).
#[derive(Debug, Clone)]
pub struct Representation {
    groupoid: Arc<FiniteGroupoid>,
    dims: Vec<usize>,
    pi: Vec<DMatrix<Complex64>>,
}

impl Representation {
    pub fn new(
        groupoid: Arc<FiniteGroupoid>,
        dims: Vec<usize>,
        pi: Vec<DMatrix<Complex64>>,
    ) -> Self {
        assert_eq!(dims.len(), groupoid.n_units());
        assert_eq!(pi.len(), groupoid.n_arrows());
        for a in groupoid.arrows() {
            assert_eq!(pi[a].nrows(), dims[groupoid.range(a)]);
            assert_eq!(pi[a].ncols(), dims[groupoid.source(a)]);
        }
        Representation { groupoid, dims, pi }
    }

    /// The one-dimensional trivial representation.
    pub fn trivial(g: &Arc<FiniteGroupoid>) -> Self {
        Representation {
            groupoid: g.clone(),
            dims: vec![1; g.n_units()],
            pi: (0..g.n_arrows()).map(|_| DMatrix::identity(1, 1)).collect(),
        }
    }

    /// The fibrewise shift representation on the range fibres
    /// (pi(a) f)(c) = f(a^{-1} c); the left regular representation of the
    /// fibre picture.
    pub fn left_regular(g: &Arc<FiniteGroupoid>) -> Self {
        let dims: Vec<usize> = g.units().map(|x| g.range_fibre(x).len()).collect();
        let pi = g
            .arrows()
            .map(|a| {
                let to = g.range_fibre(g.range(a));
                let from = g.range_fibre(g.source(a));
                DMatrix::from_fn(to.len(), from.len(), |i, j| {
                    let shifted = g.compose(g.inverse(a), to[i]).expect("same range fibre");
                    if shifted == from[j] {
                        Complex64::ONE
                    } else {
                        Complex64::ZERO
                    }
                })
            })
            .collect();
        Representation { groupoid: g.clone(), dims, pi }
    }

    pub fn groupoid(&self) -> &Arc<FiniteGroupoid> {
        &self.groupoid
    }

    pub fn dim(&self, x: UnitIx) -> usize {
        self.dims[x]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn pi(&self, a: ArrowIx) -> &DMatrix<Complex64> {
        &self.pi[a]
    }
}

/// Residuals of the representation axioms.
#[derive(Debug, Clone, Copy)]
pub struct RepReport {
    /// max |pi(unit) - id|
    pub unit_defect: f64,
    /// max |pi(ab) - pi(a) pi(b)| over composable pairs
    pub mult_defect: f64,
    /// max |pi(a)* pi(a) - id| and |pi(a) pi(a)* - id|
    pub unitary_defect: f64,
    /// max |pi(a^{-1}) - pi(a)*|
    pub inverse_defect: f64,
}

impl RepReport {
    pub fn max_defect(&self) -> f64 {
        self.unit_defect.max(self.mult_defect).max(self.unitary_defect).max(self.inverse_defect)
    }

    pub fn ok(&self, tol: f64) -> bool {
        self.max_defect() <= tol
    }
}

/// Numerically verify the representation axioms.
pub fn validate_representation(rep: &Representation) -> RepReport {
    let g = rep.groupoid();
    let unit_defect = g
        .units()
        .map(|x| {
            let d = rep.dim(x);
            numeric::max_abs(&(rep.pi(g.unit_arrow(x)) - DMatrix::<Complex64>::identity(d, d)))
        })
        .fold(0.0_f64, f64::max);
    let mult_defect = g
        .composable_pairs()
        .map(|(a, b, ab)| numeric::max_abs(&(rep.pi(ab) - rep.pi(a) * rep.pi(b))))
        .fold(0.0_f64, f64::max);
    let unitary_defect = g
        .arrows()
        .map(|a| {
            let p = rep.pi(a);
            let ds = rep.dim(g.source(a));
            let dr = rep.dim(g.range(a));
            let left = numeric::max_abs(&(p.adjoint() * p - DMatrix::<Complex64>::identity(ds, ds)));
            let right = numeric::max_abs(&(p * p.adjoint() - DMatrix::<Complex64>::identity(dr, dr)));
            left.max(right)
        })
        .fold(0.0_f64, f64::max);
    let inverse_defect = g
        .arrows()
        .map(|a| numeric::max_abs(&(rep.pi(g.inverse(a)) - rep.pi(a).adjoint())))
        .fold(0.0_f64, f64::max);
    RepReport { unit_defect, mult_defect, unitary_defect, inverse_defect }
}

/// A section of the Hilbert field: one vector per unit.
#[derive(Debug, Clone)]
pub struct Section {
    xi: Vec<DVector<Complex64>>,
}

impl Section {
    pub fn new(xi: Vec<DVector<Complex64>>) -> Self {
        Section { xi }
    }

    /// Constant section 1 for a field of one-dimensional spaces.
    pub fn constant_one(n_units: usize) -> Self {
        Section { xi: (0..n_units).map(|_| DVector::from_element(1, Complex64::ONE)).collect() }
    }

    pub fn at(&self, x: UnitIx) -> &DVector<Complex64> {
        &self.xi[x]
    }

    /// max |1 - |xi(x)|| over units; zero for unit sections.
    pub fn unit_norm_defect(&self) -> f64 {
        self.xi.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Coefficient of a representation along a section:
/// F(a) = <xi(r(a)), pi(a) xi(s(a))>.
pub fn coefficient(rep: &Representation, xi: &Section) -> Result<ArrowFunction, GnsError> {
    let g = rep.groupoid();
    if xi.xi.len() != g.n_units()
        || g.units().any(|x| xi.xi[x].len() != rep.dim(x))
    {
        return Err(GnsError::ShapeMismatch);
    }
    let mut f = ArrowFunction::zero(g);
    for a in g.arrows() {
        let v = rep.pi(a) * xi.at(g.source(a));
        f.set(a, xi.at(g.range(a)).dotc(&v));
    }
    Ok(f)
}

/// Output of the GNS construction.
#[derive(Debug)]
pub struct GnsResult {
    pub rep: Representation,
    pub section: Section,
    /// Eigenvalues in the ambiguous band around the rank cut, per unit.
    pub warnings: Vec<(UnitIx, f64)>,
}

const RANK_CUT: f64 = 1e-10;
const AMBIG_LO: f64 = 1e-12;
const AMBIG_HI: f64 = 1e-8;

/// GNS construction for a positive definite function with F|_X = 1: for
/// every unit the functions on the range fibre are completed under the Gram
/// form [F(g_i^{-1} g_j)], the shift action descends to unitaries between
/// the quotients, and the class of the unit-arrow indicator is the returned
/// section. The coefficient of the result reproduces F.
pub fn gns(f: &ArrowFunction, tol: f64) -> Result<GnsResult, GnsError> {
    let g = f.groupoid();
    let unit_defect = g
        .units()
        .map(|x| (f.value(g.unit_arrow(x)) - Complex64::ONE).norm())
        .fold(0.0_f64, f64::max);
    if unit_defect > tol {
        return Err(GnsError::UnitValueNotOne(unit_defect));
    }
    if !is_positive_definite(f, tol).is_pd {
        return Err(GnsError::NotPositiveDefinite);
    }

    let gram = range_gram(f);
    let mut warnings = Vec::new();
    // Per unit: quotient map V (dims x fibre) and pseudo-inverse W.
    let mut v_maps = Vec::with_capacity(g.n_units());
    let mut w_maps = Vec::with_capacity(g.n_units());
    let mut dims = Vec::with_capacity(g.n_units());
    for x in g.units() {
        let (vals, vecs) = numeric::hermitian_eigen(gram.block(x));
        let scale = vals.iter().copied().fold(0.0_f64, f64::max).max(1.0);
        for &v in vals.iter() {
            if v > AMBIG_LO * scale && v < AMBIG_HI * scale {
                warnings.push((x, v));
            }
        }
        let kept: Vec<usize> =
            (0..vals.len()).filter(|&i| vals[i] > RANK_CUT * scale).collect();
        let n = vecs.nrows();
        let dim = kept.len();
        let mut v_map = DMatrix::<Complex64>::zeros(dim, n);
        let mut w_map = DMatrix::<Complex64>::zeros(n, dim);
        for (row, &i) in kept.iter().enumerate() {
            let root = vals[i].sqrt();
            for j in 0..n {
                v_map[(row, j)] = vecs[(j, i)].conj() * root;
                w_map[(j, row)] = vecs[(j, i)] / root;
            }
        }
        dims.push(dim);
        v_maps.push(v_map);
        w_maps.push(w_map);
    }

    // pi(a) = V_{r(a)} . shift_a . W_{s(a)} with shift the fibre bijection.
    let pi = g
        .arrows()
        .map(|a| {
            let to = g.range_fibre(g.range(a));
            let from = g.range_fibre(g.source(a));
            let shift = DMatrix::from_fn(to.len(), from.len(), |i, j| {
                let moved = g.compose(g.inverse(a), to[i]).expect("same range fibre");
                if moved == from[j] {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                }
            });
            &v_maps[g.range(a)] * shift * &w_maps[g.source(a)]
        })
        .collect();

    let section = Section::new(
        g.units()
            .map(|x| {
                let fibre = g.range_fibre(x);
                let pos = fibre.iter().position(|&a| a == g.unit_arrow(x)).expect("unit in fibre");
                let e = DVector::from_fn(fibre.len(), |i, _| {
                    if i == pos {
                        Complex64::ONE
                    } else {
                        Complex64::ZERO
                    }
                });
                &v_maps[x] * e
            })
            .collect(),
    );

    Ok(GnsResult { rep: Representation::new(g.clone(), dims, pi), section, warnings })
}

/// A cocycle for a representation: vectors b(a) in H(r(a)) with
/// b(ab) = b(a) + pi(a) b(b).
#[derive(Debug, Clone)]
pub struct Cocycle {
    pub rep: Representation,
    pub b: Vec<DVector<Complex64>>,
}

impl Cocycle {
    pub fn new(rep: Representation, b: Vec<DVector<Complex64>>) -> Self {
        let g = rep.groupoid().clone();
        assert_eq!(b.len(), g.n_arrows());
        for a in g.arrows() {
            assert_eq!(b[a].len(), rep.dim(g.range(a)));
        }
        Cocycle { rep, b }
    }

    /// Largest violation of the cocycle law over composable pairs, plus the
    /// forced vanishing on unit arrows.
    pub fn law_defect(&self) -> f64 {
        let g = self.rep.groupoid();
        let law = g
            .composable_pairs()
            .map(|(a, b, ab)| {
                let expect = &self.b[a] + self.rep.pi(a) * &self.b[b];
                (&self.b[ab] - expect).norm()
            })
            .fold(0.0_f64, f64::max);
        let units = g
            .units()
            .map(|x| self.b[g.unit_arrow(x)].norm())
            .fold(0.0_f64, f64::max);
        law.max(units)
    }
}

/// psi(a) = |b(a)|^2; conditionally negative definite when the cocycle law
/// holds.
pub fn cocycle_to_cnd(c: &Cocycle, tol: f64) -> Result<ArrowFunction, GnsError> {
    let defect = c.law_defect();
    if defect > tol {
        return Err(GnsError::CocycleLaw(defect));
    }
    let g = c.rep.groupoid();
    let mut psi = ArrowFunction::zero(g);
    for a in g.arrows() {
        psi.set(a, Complex64::new(c.b[a].norm_squared(), 0.0));
    }
    Ok(psi)
}
