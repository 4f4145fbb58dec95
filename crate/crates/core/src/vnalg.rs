//! The inclusion A in M for a finite groupoid: the vector state phi, the
//! conditional expectation onto functions on units, modular conjugation and
//! flow, the A-valued inner product with its module Gram-Schmidt, the trace
//! of the commutant of the right action, and the two-way bridge between
//! positive definite functions and completely positive multipliers.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::algebra::{regular_rep, ArrowFunction, FibreOperator, FibreSide};
use crate::algebra::AlgebraError;
use crate::gns::{gns, GnsError};
use crate::groupoid::{measures, Bisection, FiniteGroupoid};
use crate::numeric;
use crate::posdef::is_positive_definite;
use crate::sample;

#[derive(Debug, Error)]
pub enum VnError {
    #[error("function is not positive definite")]
    NotPositiveDefinite,
    #[error("function is not 1 on unit arrows")]
    UnitValueNotOne,
    #[error("map is not A-bilinear (defect {0:.3e})")]
    NotBilinear(f64),
    #[error("operator does not commute with the right action of A")]
    NonModularOperator,
    #[error("matrix amplification size {0} exceeds the supported bound 4")]
    AmplificationTooLarge(usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Gns(#[from] GnsError),
}

/// An element of the groupoid von Neumann algebra, stored through its
/// coefficient function together with the cached regular-representation
/// blocks.
#[derive(Debug, Clone)]
pub struct VnElement {
    f: ArrowFunction,
    op: FibreOperator,
}

impl VnElement {
    pub fn from_function(f: ArrowFunction) -> Self {
        let op = regular_rep(&f);
        VnElement { f, op }
    }

    pub fn one(g: &Arc<FiniteGroupoid>) -> Self {
        Self::from_function(ArrowFunction::unit_indicator(g))
    }

    pub fn coefficient(&self) -> &ArrowFunction {
        &self.f
    }

    pub fn operator(&self) -> &FibreOperator {
        &self.op
    }

    pub fn groupoid(&self) -> &Arc<FiniteGroupoid> {
        self.f.groupoid()
    }

    pub fn mul(&self, other: &VnElement) -> Result<VnElement, VnError> {
        Ok(Self::from_function(self.f.convolve(&other.f)?))
    }

    pub fn adjoint(&self) -> VnElement {
        Self::from_function(self.f.involute())
    }

    pub fn sub(&self, other: &VnElement) -> Result<VnElement, VnError> {
        Ok(Self::from_function(self.f.sub(&other.f)?))
    }

    /// L^2 norm of the element viewed in L^2(M, phi).
    pub fn l2_norm(&self) -> f64 {
        self.f.l2_norm()
    }

    /// Deviation between the cached blocks and a fresh regular
    /// representation of the coefficient.
    pub fn cache_defect(&self) -> f64 {
        self.op.max_deviation(&regular_rep(&self.f))
    }
}

/// The vector state phi(m) = <1_X, m 1_X> = integral of the coefficient
/// over the units.
pub fn state_phi(m: &VnElement) -> Complex64 {
    let g = m.groupoid();
    g.units()
        .map(|x| m.f.value(g.unit_arrow(x)) * g.mass_f64(x))
        .sum()
}

/// Conditional expectation onto A: restriction of the coefficient to the
/// unit arrows.
pub fn cond_expectation(m: &VnElement) -> VnElement {
    let g = m.groupoid().clone();
    let mut f = ArrowFunction::zero(&g);
    for x in g.units() {
        let u = g.unit_arrow(x);
        f.set(u, m.f.value(u));
    }
    VnElement::from_function(f)
}

/// Modular conjugation (J xi)(a) = delta(a)^{1/2} conj(xi(a^{-1})).
pub fn modular_conjugation(xi: &ArrowFunction) -> ArrowFunction {
    let g = xi.groupoid();
    let m = measures(g);
    let values = g
        .arrows()
        .map(|a| xi.value(g.inverse(a)).conj() * m.delta_f64(a).sqrt())
        .collect();
    ArrowFunction::from_values(g, values)
}

/// Modular flow sigma_t: multiply the coefficient pointwise by delta^{it}.
pub fn modular_flow(m: &VnElement, t: f64) -> VnElement {
    let g = m.groupoid();
    let meas = measures(g);
    let values = g
        .arrows()
        .map(|a| {
            let phase = Complex64::new(0.0, t * meas.delta_f64(a).ln()).exp();
            m.f.value(a) * phase
        })
        .collect();
    VnElement::from_function(ArrowFunction::from_values(g, values))
}

/// A-valued inner product <xi, eta>_A(x) = sum over s(a) = x of
/// conj(xi(a)) eta(a); one value per unit.
pub fn a_inner(xi: &ArrowFunction, eta: &ArrowFunction) -> Result<Vec<Complex64>, VnError> {
    if !xi.same_groupoid(eta) {
        return Err(VnError::Algebra(AlgebraError::GroupoidMismatch));
    }
    let g = xi.groupoid();
    Ok(g
        .units()
        .map(|x| {
            g.source_fibre(x)
                .iter()
                .map(|&a| xi.value(a).conj() * eta.value(a))
                .sum()
        })
        .collect())
}

/// Right action of a in A on a module vector: (xi a)(c) = xi(c) a(s(c)).
pub fn right_unit_action(xi: &ArrowFunction, a: &[Complex64]) -> ArrowFunction {
    let g = xi.groupoid();
    assert_eq!(a.len(), g.n_units());
    let values = g.arrows().map(|c| xi.value(c) * a[g.source(c)]).collect();
    ArrowFunction::from_values(g, values)
}

/// Output of the module Gram-Schmidt pass.
#[derive(Debug)]
pub struct GramSchmidt {
    pub family: Vec<ArrowFunction>,
    /// Per output vector, the support projection p_j as a unit indicator.
    pub projections: Vec<Vec<bool>>,
    /// max deviation of <xi_i, xi_j>_A from delta_ij p_j.
    pub defect: f64,
}

/// Orthonormalize a finite family in the right-A-module sense:
/// <xi_i, xi_j>_A = delta_ij p_j with p_j projections in A. Degenerate
/// fibres are zeroed, giving p_j = 0 there.
pub fn module_gram_schmidt(vectors: &[ArrowFunction], tol: f64) -> Result<GramSchmidt, VnError> {
    let mut family: Vec<ArrowFunction> = Vec::new();
    let mut projections: Vec<Vec<bool>> = Vec::new();
    for v in vectors {
        let g = v.groupoid().clone();
        let mut w = v.clone();
        for xi in &family {
            let coeff = a_inner(xi, &w)?;
            w = w.sub(&right_unit_action(xi, &coeff))?;
        }
        let norms = a_inner(&w, &w)?;
        let mut p = vec![false; g.n_units()];
        for x in g.units() {
            let c = norms[x].re;
            if c > tol {
                p[x] = true;
                let scale = 1.0 / c.sqrt();
                for &a in g.source_fibre(x) {
                    w.set(a, w.value(a) * scale);
                }
            } else {
                for &a in g.source_fibre(x) {
                    w.set(a, Complex64::ZERO);
                }
            }
        }
        family.push(w);
        projections.push(p);
    }

    let mut defect: f64 = 0.0;
    for (i, xi) in family.iter().enumerate() {
        for (j, eta) in family.iter().enumerate() {
            let inner = a_inner(xi, eta)?;
            for (x, v) in inner.iter().enumerate() {
                let expect = if i == j && projections[j][x] { 1.0 } else { 0.0 };
                defect = defect.max((v - Complex64::new(expect, 0.0)).norm());
            }
        }
    }
    Ok(GramSchmidt { family, projections, defect })
}

/// The projection e_A onto functions supported on unit arrows, as
/// source-fibre blocks.
pub fn e_a(g: &Arc<FiniteGroupoid>) -> FibreOperator {
    let blocks = g
        .units()
        .map(|x| {
            let fibre = g.source_fibre(x);
            let pos = fibre.iter().position(|&a| a == g.unit_arrow(x)).expect("unit in fibre");
            DMatrix::from_fn(fibre.len(), fibre.len(), |i, j| {
                if i == pos && j == pos {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                }
            })
        })
        .collect();
    FibreOperator::new(g, FibreSide::Source, blocks)
}

/// Pointwise multiplication operator by an arrow function.
pub fn mult_operator(f: &ArrowFunction) -> FibreOperator {
    let g = f.groupoid();
    let blocks = g
        .units()
        .map(|x| {
            let fibre = g.source_fibre(x);
            DMatrix::from_fn(fibre.len(), fibre.len(), |i, j| {
                if i == j {
                    f.value(fibre[i])
                } else {
                    Complex64::ZERO
                }
            })
        })
        .collect();
    FibreOperator::new(g, FibreSide::Source, blocks)
}

/// Rank-one module operator L_xi L_eta^*: alpha -> xi <eta, alpha>_A.
pub fn rank_one(xi: &ArrowFunction, eta: &ArrowFunction) -> Result<FibreOperator, VnError> {
    if !xi.same_groupoid(eta) {
        return Err(VnError::Algebra(AlgebraError::GroupoidMismatch));
    }
    let g = xi.groupoid();
    let blocks = g
        .units()
        .map(|x| {
            let fibre = g.source_fibre(x);
            DMatrix::from_fn(fibre.len(), fibre.len(), |i, j| {
                xi.value(fibre[i]) * eta.value(fibre[j]).conj()
            })
        })
        .collect();
    Ok(FibreOperator::new(g, FibreSide::Source, blocks))
}

/// Canonical trace of the commutant of the right A-action, computed against
/// an orthonormal module basis coming from a bisection partition:
/// Tr(x) = sum_n <1_{S_n}, x 1_{S_n}>. Operators on the range fibres do not
/// commute with the right action and are rejected.
pub fn trace(
    op: &FibreOperator,
    partition: &[Bisection],
) -> Result<Complex64, VnError> {
    if op.side() != FibreSide::Source {
        return Err(VnError::NonModularOperator);
    }
    let g = op.groupoid();
    let mut total = Complex64::ZERO;
    for piece in partition {
        let ind = ArrowFunction::indicator(g, &piece.arrows);
        total += ind.l2_inner(&op.apply(&ind))?;
    }
    Ok(total)
}

/// A normal map on the algebra, stored as a matrix in the point-mass basis
/// of coefficient functions.
#[derive(Debug, Clone)]
pub struct CpMap {
    groupoid: Arc<FiniteGroupoid>,
    matrix: DMatrix<Complex64>,
}

impl CpMap {
    pub fn new(g: &Arc<FiniteGroupoid>, matrix: DMatrix<Complex64>) -> Self {
        assert_eq!(matrix.nrows(), g.n_arrows());
        assert_eq!(matrix.ncols(), g.n_arrows());
        CpMap { groupoid: g.clone(), matrix }
    }

    pub fn identity(g: &Arc<FiniteGroupoid>) -> Self {
        Self::new(g, DMatrix::identity(g.n_arrows(), g.n_arrows()))
    }

    /// Diagonal multiplier m(f) -> m(F f).
    pub fn from_multiplier(f: &ArrowFunction) -> Self {
        let g = f.groupoid();
        let n = g.n_arrows();
        let mut m = DMatrix::zeros(n, n);
        for a in g.arrows() {
            m[(a, a)] = f.value(a);
        }
        Self::new(g, m)
    }

    /// The conditional expectation as a map on coefficients.
    pub fn conditional_expectation(g: &Arc<FiniteGroupoid>) -> Self {
        Self::from_multiplier(&ArrowFunction::unit_indicator(g))
    }

    pub fn groupoid(&self) -> &Arc<FiniteGroupoid> {
        &self.groupoid
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn apply_fn(&self, f: &ArrowFunction) -> Result<ArrowFunction, VnError> {
        if !f.same_groupoid(&ArrowFunction::zero(&self.groupoid)) {
            return Err(VnError::Algebra(AlgebraError::GroupoidMismatch));
        }
        let v = DVector::from_iterator(f.values().len(), f.values().iter().copied());
        let w = &self.matrix * v;
        Ok(ArrowFunction::from_values(&self.groupoid, w.iter().copied().collect()))
    }

    pub fn apply(&self, m: &VnElement) -> Result<VnElement, VnError> {
        Ok(VnElement::from_function(self.apply_fn(m.coefficient())?))
    }

    /// |Phi(1_X) - 1_X| in the sup norm of coefficients.
    pub fn unital_defect(&self) -> f64 {
        let one = ArrowFunction::unit_indicator(&self.groupoid);
        self.apply_fn(&one).expect("same groupoid").max_deviation(&one)
    }

    /// A-bilinearity on the point-mass basis: the matrix may not move mass
    /// between arrows with different endpoints.
    pub fn bilinearity_defect(&self) -> f64 {
        let g = &self.groupoid;
        let mut defect: f64 = 0.0;
        for j in g.arrows() {
            for i in g.arrows() {
                if g.source(i) != g.source(j) || g.range(i) != g.range(j) {
                    defect = defect.max(self.matrix[(i, j)].norm());
                }
            }
        }
        defect
    }
}

/// The completely positive multiplier of a positive definite function F
/// with F|_X = 1: on coefficients, f -> F f.
pub fn cp_from_pd(f: &ArrowFunction, tol: f64) -> Result<CpMap, VnError> {
    let g = f.groupoid();
    let unit_defect = g
        .units()
        .map(|x| (f.value(g.unit_arrow(x)) - Complex64::ONE).norm())
        .fold(0.0_f64, f64::max);
    if unit_defect > tol {
        return Err(VnError::UnitValueNotOne);
    }
    if !is_positive_definite(f, tol).is_pd {
        return Err(VnError::NotPositiveDefinite);
    }
    Ok(CpMap::from_multiplier(f))
}

/// Extract the positive definite function of an A-bilinear map through a
/// bisection partition: F(a) = E_A(Phi(1_S) 1_S^*)(r(a)) for the piece S
/// containing a. Partition independence is a property of the map, not of
/// the formula; callers verify it by passing a second partition.
pub fn pd_from_cp(
    phi: &CpMap,
    partition: &[Bisection],
    tol: f64,
) -> Result<ArrowFunction, VnError> {
    let defect = phi.bilinearity_defect();
    if defect > tol {
        return Err(VnError::NotBilinear(defect));
    }
    let g = phi.groupoid();
    let mut out = ArrowFunction::zero(g);
    for piece in partition {
        let ind = ArrowFunction::indicator(g, &piece.arrows);
        let h = phi.apply_fn(&ind)?.convolve(&ind.involute())?;
        for &a in &piece.arrows {
            out.set(a, h.value(g.unit_arrow(g.range(a))));
        }
    }
    Ok(out)
}

/// Residuals of the dilation identity behind a positive definite
/// multiplier.
#[derive(Debug, Clone, Copy)]
pub struct StinespringReport {
    /// max over point masses and units of |S* (L(f) (x) id) S - L(F f)|
    pub residual: f64,
    /// max |S* S - id|
    pub isometry_defect: f64,
}

/// Build the isometry S(h)(a) = h(a) pi(a)* xi(r(a)) from the GNS data of F
/// and measure how well S* (L(f) (x) id) S = L(F f) holds on the point-mass
/// basis.
pub fn verify_stinespring(f: &ArrowFunction, tol: f64) -> Result<StinespringReport, VnError> {
    let g = f.groupoid().clone();
    let out = gns(f, tol)?;
    let rep = &out.rep;
    let xi = &out.section;

    // Per unit x: S_x maps l^2(G_x) into l^2(G_x) tensor K(x).
    let mut s_blocks: Vec<DMatrix<Complex64>> = Vec::with_capacity(g.n_units());
    for x in g.units() {
        let fibre = g.source_fibre(x);
        let d = rep.dim(x);
        let mut s = DMatrix::zeros(fibre.len() * d, fibre.len());
        for (i, &a) in fibre.iter().enumerate() {
            let v = rep.pi(a).adjoint() * xi.at(g.range(a));
            for k in 0..d {
                s[(i * d + k, i)] = v[k];
            }
        }
        s_blocks.push(s);
    }

    let isometry_defect = g
        .units()
        .map(|x| {
            let s = &s_blocks[x];
            let n = s.ncols();
            numeric::max_abs(&(s.adjoint() * s - DMatrix::<Complex64>::identity(n, n)))
        })
        .fold(0.0_f64, f64::max);

    let mut residual: f64 = 0.0;
    for a0 in g.arrows() {
        let point = ArrowFunction::point_mass(&g, a0);
        let lf = regular_rep(&point);
        let rhs = regular_rep(&point.pointwise_mul(f)?);
        for x in g.units() {
            let d = rep.dim(x);
            let amplified = lf.block(x).kronecker(&DMatrix::<Complex64>::identity(d, d));
            let lhs = s_blocks[x].adjoint() * amplified * &s_blocks[x];
            residual = residual.max(numeric::max_abs(&(lhs - rhs.block(x))));
        }
    }
    Ok(StinespringReport { residual, isometry_defect })
}

/// Result of the randomized complete-positivity probe.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub positive: bool,
    pub min_eig: f64,
    /// Index of the first failing sample, if any (0 is the bisection-Gram
    /// witness).
    pub failing_sample: Option<usize>,
}

/// Apply the map entrywise to positive k x k matrices over the algebra and
/// test positivity of the amplified operators. Sample 0 is the structured
/// Gram matrix of the first k bisection indicators; the rest are random
/// y* y.
pub fn complete_positivity_probe(
    phi: &CpMap,
    k: usize,
    samples: usize,
    rng: &mut impl Rng,
    tol: f64,
) -> Result<ProbeReport, VnError> {
    if k > 4 {
        return Err(VnError::AmplificationTooLarge(k));
    }
    let g = phi.groupoid().clone();
    let zero = ArrowFunction::zero(&g);

    let mut min_eig = f64::INFINITY;
    let mut failing = None;

    for sample in 0..=samples {
        // Positive element x = y* y of M_k(M).
        let y: Vec<Vec<ArrowFunction>> = if sample == 0 {
            let parts = crate::groupoid::bisection_partition(&g);
            let row: Vec<ArrowFunction> = (0..k)
                .map(|j| {
                    parts
                        .get(j)
                        .map(|p| ArrowFunction::indicator(&g, &p.arrows))
                        .unwrap_or_else(|| zero.clone())
                })
                .collect();
            let mut m = vec![vec![zero.clone(); k]; k];
            m[0] = row;
            m
        } else {
            (0..k)
                .map(|_| (0..k).map(|_| sample::random_function(&g, rng)).collect())
                .collect()
        };

        let mut x = vec![vec![zero.clone(); k]; k];
        for i in 0..k {
            for j in 0..k {
                let mut acc = zero.clone();
                for row in y.iter() {
                    acc = acc.add(&row[i].involute().convolve(&row[j])?)?;
                }
                x[i][j] = acc;
            }
        }

        // Entrywise application, then the amplified operator per unit.
        let mut z = vec![vec![zero.clone(); k]; k];
        for i in 0..k {
            for j in 0..k {
                z[i][j] = phi.apply_fn(&x[i][j])?;
            }
        }
        let blocks: Vec<Vec<FibreOperator>> =
            z.iter().map(|row| row.iter().map(regular_rep).collect()).collect();

        for u in g.units() {
            let n = g.source_fibre(u).len();
            let big = DMatrix::from_fn(k * n, k * n, |r, c| {
                blocks[r / n][c / n].block(u)[(r % n, c % n)]
            });
            let scale = f64::max(1.0, numeric::max_abs(&big));
            let eig = numeric::hermitian_eigenvalues(&big).min();
            if eig < min_eig {
                min_eig = eig;
            }
            if eig < -tol * scale && failing.is_none() {
                failing = Some(sample);
            }
        }
    }

    Ok(ProbeReport { positive: failing.is_none(), min_eig, failing_sample: failing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::groupoid::{bisection_partition, singleton_partition};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-10;

    fn elem(g: &Arc<FiniteGroupoid>, id: &str) -> VnElement {
        VnElement::from_function(ArrowFunction::point_mass(g, g.arrow_ix(id).unwrap()))
    }

    #[test]
    fn phi_values() {
        let g = fixtures::r2();
        assert!((state_phi(&VnElement::one(&g)) - Complex64::ONE).norm() < 1e-15);
        assert!(state_phi(&elem(&g, "ab")).norm() < 1e-15);
    }

    #[test]
    fn phi_inner_product_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for g in fixtures::all() {
            let f = sample::random_function(&g, &mut rng);
            let h = sample::random_function(&g, &mut rng);
            let lhs = state_phi(
                &VnElement::from_function(f.involute().convolve(&h).unwrap()),
            );
            let rhs = f.l2_inner(&h).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn phi_is_faithful() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        for g in fixtures::all() {
            let f = sample::random_function(&g, &mut rng);
            let m = VnElement::from_function(f.clone());
            let phi = state_phi(&m.adjoint().mul(&m).unwrap());
            assert!((phi.re - f.l2_norm_sq()).abs() < 1e-12);
            assert!(phi.im.abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_expectation_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        for g in fixtures::all() {
            let m = VnElement::from_function(sample::random_function(&g, &mut rng));
            let e = cond_expectation(&m);
            let ee = cond_expectation(&e);
            assert!(e.coefficient().max_deviation(ee.coefficient()) == 0.0);
            assert!((state_phi(&m) - state_phi(&e)).norm() < 1e-14);

            // E_A = compression by e_A on coefficients.
            let compressed = e_a(&g).apply(m.coefficient());
            assert!(compressed.max_deviation(e.coefficient()) == 0.0);

            // A-bilinearity with diagonal elements a, b.
            let a = diag_element(&g, &mut rng);
            let b = diag_element(&g, &mut rng);
            let lhs = cond_expectation(&a.mul(&m).unwrap().mul(&b).unwrap());
            let rhs = a.mul(&cond_expectation(&m)).unwrap().mul(&b).unwrap();
            assert!(lhs.coefficient().max_deviation(rhs.coefficient()) < 1e-12);
        }
    }

    fn diag_element(g: &Arc<FiniteGroupoid>, rng: &mut impl Rng) -> VnElement {
        let mut f = ArrowFunction::zero(g);
        for x in g.units() {
            f.set(
                g.unit_arrow(x),
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            );
        }
        VnElement::from_function(f)
    }

    #[test]
    fn modular_conjugation_uniform_case() {
        let g = fixtures::r2();
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let xi = sample::random_function(&g, &mut rng);
        // delta = 1: J is plain involution on functions.
        assert!(modular_conjugation(&xi).max_deviation(&xi.involute()) < 1e-15);
        assert!(modular_conjugation(&modular_conjugation(&xi)).max_deviation(&xi) < 1e-15);
    }

    #[test]
    fn modular_conjugation_weighted() {
        let g = fixtures::r2w();
        let ab = ArrowFunction::point_mass(&g, g.arrow_ix("ab").unwrap());
        let j_ab = modular_conjugation(&ab);
        assert!((j_ab.l2_norm() - ab.l2_norm()).abs() < 1e-14);
        assert!(modular_conjugation(&j_ab).max_deviation(&ab) < 1e-14);
        // The single nonzero value lands on ba, scaled by delta(ba)^{1/2};
        // that is the scale preserving the weighted norm.
        let ba = g.arrow_ix("ba").unwrap();
        let expect = measures(&g).delta_f64(ba).sqrt();
        assert!((j_ab.value(ba).re - expect).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let xi = sample::random_function(&g, &mut rng);
        assert!((modular_conjugation(&xi).l2_norm() - xi.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn j_conjugation_is_right_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(127);
        for g in fixtures::all() {
            let meas = measures(&g);
            let f = sample::random_function(&g, &mut rng);
            let xi = sample::random_function(&g, &mut rng);
            let jlj = modular_conjugation(&regular_rep(&f).apply(&modular_conjugation(&xi)));
            let gfun = ArrowFunction::from_values(
                &g,
                g.arrows()
                    .map(|a| f.involute().value(a) * meas.delta_f64(a).sqrt())
                    .collect(),
            );
            let rhs = xi.convolve(&gfun).unwrap();
            assert!(jlj.max_deviation(&rhs) < 1e-12);
        }
    }

    #[test]
    fn commutant_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(131);
        for g in fixtures::all() {
            let f = sample::random_function(&g, &mut rng);
            let h = sample::random_function(&g, &mut rng);
            let xi = sample::random_function(&g, &mut rng);
            // [J L(f) J, L(h)] = 0 applied to xi.
            let jfj = |v: &ArrowFunction| {
                modular_conjugation(&regular_rep(&f).apply(&modular_conjugation(v)))
            };
            let lh = regular_rep(&h);
            let lhs = jfj(&lh.apply(&xi));
            let rhs = lh.apply(&jfj(&xi));
            assert!(lhs.max_deviation(&rhs) < 1e-10);
        }
    }

    #[test]
    fn modular_flow_properties() {
        let g = fixtures::r2w();
        let t = std::f64::consts::PI / (2.0f64).ln();
        let m = elem(&g, "ab");
        let flowed = modular_flow(&m, t);
        // delta(ab) = 2, so the phase is exp(i pi) = -1.
        assert!((flowed.coefficient().value(g.arrow_ix("ab").unwrap()) + Complex64::ONE).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(137);
        for g in fixtures::all() {
            let a = VnElement::from_function(sample::random_function(&g, &mut rng));
            let b = VnElement::from_function(sample::random_function(&g, &mut rng));
            let t = 0.7;
            let lhs = modular_flow(&a.mul(&b).unwrap(), t);
            let rhs = modular_flow(&a, t).mul(&modular_flow(&b, t)).unwrap();
            assert!(lhs.coefficient().max_deviation(rhs.coefficient()) < 1e-12);
            // sigma_0 = id and sigma_t fixes A.
            assert!(modular_flow(&a, 0.0).coefficient().max_deviation(a.coefficient()) == 0.0);
            let d = diag_element(&g, &mut rng);
            assert!(modular_flow(&d, t).coefficient().max_deviation(d.coefficient()) < 1e-15);
        }
    }

    #[test]
    fn gram_schmidt_fixes_bisection_basis() {
        let g = fixtures::r2();
        let parts = bisection_partition(&g);
        let vecs: Vec<ArrowFunction> =
            parts.iter().map(|p| ArrowFunction::indicator(&g, &p.arrows)).collect();
        let out = module_gram_schmidt(&vecs, TOL).unwrap();
        assert!(out.defect < 1e-12);
        for (v, w) in vecs.iter().zip(&out.family) {
            assert!(v.max_deviation(w) < 1e-12);
        }
        assert!(out.projections.iter().all(|p| p.iter().all(|&b| b)));
    }

    #[test]
    fn gram_schmidt_dependent_input() {
        let g = fixtures::r2();
        let one = ArrowFunction::unit_indicator(&g);
        let out = module_gram_schmidt(&[one.clone(), one.clone()], TOL).unwrap();
        assert!(out.family[1].max_abs() < 1e-12);
        assert!(out.projections[1].iter().all(|&b| !b));
        assert!(out.defect < 1e-12);
    }

    #[test]
    fn gram_schmidt_reconstruction_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(139);
        let g = fixtures::r3();
        let vecs: Vec<ArrowFunction> =
            (0..3).map(|_| sample::random_function(&g, &mut rng)).collect();
        let out = module_gram_schmidt(&vecs, TOL).unwrap();
        assert!(out.defect < 1e-10);
        // <xi, xi>_A = sum_i <xi, xi_i>_A <xi_i, xi>_A for xi in the span.
        let xi = &vecs[2];
        let lhs = a_inner(xi, xi).unwrap();
        let mut rhs = vec![Complex64::ZERO; g.n_units()];
        for basis in &out.family {
            let c = a_inner(xi, basis).unwrap();
            for x in g.units() {
                rhs[x] += c[x] * c[x].conj();
            }
        }
        for x in g.units() {
            assert!((lhs[x] - rhs[x]).norm() < 1e-10);
        }
    }

    #[test]
    fn trace_values() {
        let g = fixtures::r2();
        let parts = bisection_partition(&g);
        assert!((trace(&e_a(&g), &parts).unwrap() - Complex64::ONE).norm() < 1e-14);
        let ones = ArrowFunction::from_values(&g, vec![Complex64::ONE; g.n_arrows()]);
        let t = trace(&mult_operator(&ones), &parts).unwrap();
        assert!((t - Complex64::new(2.0, 0.0)).norm() < 1e-14);

        let ab = ArrowFunction::point_mass(&g, g.arrow_ix("ab").unwrap());
        let r1 = rank_one(&ab, &ab).unwrap();
        assert!((trace(&r1, &parts).unwrap() - Complex64::new(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn trace_partition_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(149);
        for g in fixtures::all() {
            let xi = sample::random_function(&g, &mut rng);
            let eta = sample::random_function(&g, &mut rng);
            let op = rank_one(&xi, &eta).unwrap();
            let t1 = trace(&op, &bisection_partition(&g)).unwrap();
            let t2 = trace(&op, &singleton_partition(&g)).unwrap();
            assert!((t1 - t2).norm() < 1e-10);
            // Lemma-style check against tau(<eta, xi>_A).
            let inner = a_inner(&eta, &xi).unwrap();
            let tau: Complex64 = g.units().map(|x| inner[x] * g.mass_f64(x)).sum();
            assert!((t1 - tau).norm() < 1e-10);
        }
    }

    #[test]
    fn trace_rejects_range_side() {
        let g = fixtures::r2();
        let op = crate::posdef::range_gram(&ArrowFunction::unit_indicator(&g));
        assert!(matches!(
            trace(&op, &bisection_partition(&g)),
            Err(VnError::NonModularOperator)
        ));
    }

    #[test]
    fn cp_roundtrip_examples() {
        let g = fixtures::r2();
        let parts = bisection_partition(&g);

        let id = CpMap::identity(&g);
        let f = pd_from_cp(&id, &parts, TOL).unwrap();
        assert!(g.arrows().all(|a| (f.value(a) - Complex64::ONE).norm() < 1e-12));

        let ea = CpMap::conditional_expectation(&g);
        let f = pd_from_cp(&ea, &parts, TOL).unwrap();
        assert!(f.max_deviation(&ArrowFunction::unit_indicator(&g)) < 1e-12);
    }

    #[test]
    fn cp_pd_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(151);
        for g in fixtures::all() {
            for _ in 0..10 {
                let f = sample::random_pd(&g, &mut rng);
                let phi = cp_from_pd(&f, TOL).unwrap();
                assert!(phi.unital_defect() < 1e-12);
                assert!(phi.bilinearity_defect() == 0.0);
                // E_A after Phi is E_A.
                let m = VnElement::from_function(sample::random_function(&g, &mut rng));
                let lhs = cond_expectation(&phi.apply(&m).unwrap());
                let rhs = cond_expectation(&m);
                assert!(lhs.coefficient().max_deviation(rhs.coefficient()) < 1e-12);

                for parts in [bisection_partition(&g), singleton_partition(&g)] {
                    let back = pd_from_cp(&phi, &parts, TOL).unwrap();
                    assert!(back.max_deviation(&f) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn cp_contracts_l2() {
        let mut rng = ChaCha8Rng::seed_from_u64(157);
        for g in fixtures::all() {
            let f = sample::random_pd(&g, &mut rng);
            let phi = cp_from_pd(&f, TOL).unwrap();
            for _ in 0..10 {
                let m = VnElement::from_function(sample::random_function(&g, &mut rng));
                assert!(phi.apply(&m).unwrap().l2_norm() <= m.l2_norm() + 1e-10);
            }
        }
    }

    #[test]
    fn pd_from_cp_rejects_non_bilinear() {
        let g = fixtures::r2();
        let n = g.n_arrows();
        let mut m = DMatrix::<Complex64>::identity(n, n);
        // Move mass from ab to aa: different endpoints.
        m[(g.arrow_ix("aa").unwrap(), g.arrow_ix("ab").unwrap())] = Complex64::ONE;
        let phi = CpMap::new(&g, m);
        assert!(matches!(
            pd_from_cp(&phi, &bisection_partition(&g), TOL),
            Err(VnError::NotBilinear(_))
        ));
    }

    #[test]
    fn stinespring_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(163);
        let ones = |g: &Arc<FiniteGroupoid>| {
            ArrowFunction::from_values(g, vec![Complex64::ONE; g.n_arrows()])
        };
        for g in fixtures::all() {
            let report = verify_stinespring(&ones(&g), TOL).unwrap();
            assert!(report.residual < 1e-10);
            assert!(report.isometry_defect < 1e-10);
            for _ in 0..5 {
                let f = sample::random_pd(&g, &mut rng);
                let report = verify_stinespring(&f, TOL).unwrap();
                assert!(report.residual < 1e-8, "residual {}", report.residual);
                assert!(report.isometry_defect < 1e-8);
            }
        }
    }

    #[test]
    fn probe_accepts_cp_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(167);
        let g = fixtures::r2();
        let id = CpMap::identity(&g);
        assert!(complete_positivity_probe(&id, 2, 10, &mut rng, 1e-9).unwrap().positive);

        let f = sample::random_pd(&g, &mut rng);
        let phi = cp_from_pd(&f, TOL).unwrap();
        assert!(complete_positivity_probe(&phi, 2, 20, &mut rng, 1e-9).unwrap().positive);
    }

    #[test]
    fn probe_rejects_non_pd_multiplier() {
        let mut rng = ChaCha8Rng::seed_from_u64(173);
        let g = fixtures::r2();
        let mut f = ArrowFunction::unit_indicator(&g);
        f.set_by_id("ab", Complex64::new(2.0, 0.0)).unwrap();
        f.set_by_id("ba", Complex64::new(2.0, 0.0)).unwrap();
        let phi = CpMap::from_multiplier(&f);
        let report = complete_positivity_probe(&phi, 2, 20, &mut rng, 1e-9).unwrap();
        assert!(!report.positive);
        assert_eq!(report.failing_sample, Some(0), "structured witness catches it");
    }

    #[test]
    fn probe_rejects_oversized_amplification() {
        let g = fixtures::r2();
        let mut rng = ChaCha8Rng::seed_from_u64(179);
        assert!(matches!(
            complete_positivity_probe(&CpMap::identity(&g), 5, 1, &mut rng, 1e-9),
            Err(VnError::AmplificationTooLarge(5))
        ));
    }

    #[test]
    fn vn_element_cache_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(181);
        let g = fixtures::r3();
        let m = VnElement::from_function(sample::random_function(&g, &mut rng));
        assert!(m.cache_defect() == 0.0);
    }
}
