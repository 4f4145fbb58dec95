//! Positive definite and conditionally negative definite functions on a
//! finite groupoid: fibrewise Gram-matrix tests, the exponential transform,
//! extension by zero along a subgroupoid, sums of the form
//! psi = sum alpha_k Re(1 - F_k), and exact-mass properness profiles.

use std::collections::HashSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;
use thiserror::Error;

use crate::algebra::{ArrowFunction, FibreOperator, FibreSide};
use crate::groupoid::{ArrowIx, FiniteGroupoid, UnitIx};
use crate::numeric;

#[derive(Debug, Error)]
pub enum PosdefError {
    #[error("function has a nonzero imaginary part (real input required)")]
    NonRealInput,
    #[error("function is not conditionally negative definite")]
    NotCnd,
    #[error("function is not positive definite")]
    NotPositiveDefinite,
    #[error("function is not 1 on unit arrows (found |F - 1| = {0:.3e})")]
    UnitValueNotOne(f64),
    #[error("arrow set is not a subgroupoid: {0}")]
    NotSubgroupoid(String),
    #[error("weights do not match the function list")]
    WeightMismatch,
}

/// Per-unit eigenvalue diagnostics of a fibre Gram test.
#[derive(Debug, Clone)]
pub struct UnitEigDiag {
    pub unit: UnitIx,
    pub dim: usize,
    pub min_eig: f64,
    pub scale: f64,
}

/// Outcome of the positive-definiteness test.
#[derive(Debug, Clone)]
pub struct PdReport {
    pub is_pd: bool,
    pub hermitian_defect: f64,
    pub units: Vec<UnitEigDiag>,
}

impl PdReport {
    /// Smallest eigenvalue witnessed over all fibres.
    pub fn min_eig(&self) -> f64 {
        self.units.iter().map(|u| u.min_eig).fold(f64::INFINITY, f64::min)
    }
}

/// The family of fibre Gram matrices M_x[i, j] = F(g_i^{-1} g_j) over the
/// range fibres G^x. These blocks are also the rho-operator of the function.
pub fn range_gram(f: &ArrowFunction) -> FibreOperator {
    FibreOperator::new(f.groupoid(), FibreSide::Range, gram_blocks(f, None))
}

fn gram_blocks(f: &ArrowFunction, subset: Option<&HashSet<ArrowIx>>) -> Vec<DMatrix<Complex64>> {
    let g = f.groupoid();
    g.units()
        .map(|x| {
            let fibre: Vec<ArrowIx> = g
                .range_fibre(x)
                .iter()
                .copied()
                .filter(|a| subset.map_or(true, |s| s.contains(a)))
                .collect();
            DMatrix::from_fn(fibre.len(), fibre.len(), |i, j| {
                let a = g.compose(g.inverse(fibre[i]), fibre[j]).expect("same range fibre");
                f.value(a)
            })
        })
        .collect()
}

fn pd_report_from_blocks(blocks: &[DMatrix<Complex64>], tol: f64) -> PdReport {
    let mut units = Vec::new();
    let mut herm: f64 = 0.0;
    let mut is_pd = true;
    for (x, block) in blocks.iter().enumerate() {
        let defect = numeric::hermitian_defect(block);
        herm = herm.max(defect);
        let scale = f64::max(1.0, numeric::inf_norm(block));
        let min_eig = if block.is_empty() {
            0.0
        } else {
            numeric::hermitian_eigenvalues(block).min()
        };
        if defect > tol * scale || min_eig < -tol * scale {
            is_pd = false;
        }
        units.push(UnitEigDiag { unit: x, dim: block.nrows(), min_eig, scale });
    }
    PdReport { is_pd, hermitian_defect: herm, units }
}

/// Positive definiteness: every fibre Gram matrix Hermitian and PSD within
/// `tol` (relative to max(1, inf-norm) per fibre).
pub fn is_positive_definite(f: &ArrowFunction, tol: f64) -> PdReport {
    pd_report_from_blocks(&gram_blocks(f, None), tol)
}

/// Positive definiteness of a function restricted to a subgroupoid given as
/// an arrow subset (fibres are intersected with the subset).
pub fn is_positive_definite_on(f: &ArrowFunction, subset: &[ArrowIx], tol: f64) -> PdReport {
    let set: HashSet<ArrowIx> = subset.iter().copied().collect();
    pd_report_from_blocks(&gram_blocks(f, Some(&set)), tol)
}

/// Outcome of the conditional-negative-definiteness test.
#[derive(Debug, Clone)]
pub struct CndReport {
    pub is_cnd: bool,
    /// max |psi| over unit arrows
    pub unit_defect: f64,
    /// max |psi(a) - psi(a^{-1})|
    pub symmetry_defect: f64,
    /// per-unit max eigenvalue of the compression to mean-zero vectors
    pub units: Vec<UnitEigDiag>,
    /// the classical consequence psi >= 0, reported separately
    pub min_value: f64,
}

/// Real conditionally negative definite test: psi vanishes on units, is
/// inversion-symmetric, and each fibre matrix compressed to the orthogonal
/// complement of the constant vector has no positive eigenvalue.
pub fn is_cnd(psi: &ArrowFunction, tol: f64) -> Result<CndReport, PosdefError> {
    if !psi.is_real() {
        return Err(PosdefError::NonRealInput);
    }
    let g = psi.groupoid();
    let unit_defect = g
        .units()
        .map(|x| psi.value(g.unit_arrow(x)).norm())
        .fold(0.0_f64, f64::max);
    let symmetry_defect = g
        .arrows()
        .map(|a| (psi.value(a) - psi.value(g.inverse(a))).norm())
        .fold(0.0_f64, f64::max);
    let min_value = g.arrows().map(|a| psi.value(a).re).fold(f64::INFINITY, f64::min);

    let gram = range_gram(psi);
    let mut units = Vec::new();
    let mut eig_ok = true;
    for x in g.units() {
        let block = gram.block(x);
        let n = block.nrows();
        let scale = f64::max(1.0, numeric::inf_norm(block));
        // Compression P M P with P the projection killing constants.
        let p = DMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            Complex64::new(delta - 1.0 / n as f64, 0.0)
        });
        let compressed = &p * block * &p;
        let max_eig = if n == 0 {
            0.0
        } else {
            numeric::hermitian_eigenvalues(&compressed).max()
        };
        if max_eig > tol * scale {
            eig_ok = false;
        }
        units.push(UnitEigDiag { unit: x, dim: n, min_eig: max_eig, scale });
    }

    let is_cnd = unit_defect <= tol && symmetry_defect <= tol && eig_ok;
    Ok(CndReport { is_cnd, unit_defect, symmetry_defect, units, min_value })
}

/// Exponential transform F = exp(-t psi) of a conditionally negative
/// definite function; rejects inputs that fail [`is_cnd`].
pub fn schoenberg(psi: &ArrowFunction, t: f64, tol: f64) -> Result<ArrowFunction, PosdefError> {
    let report = is_cnd(psi, tol)?;
    if !report.is_cnd {
        return Err(PosdefError::NotCnd);
    }
    Ok(psi.map(|v| Complex64::new((-t * v.re).exp(), 0.0)))
}

/// Check that an arrow set is a subgroupoid over the same units: contains
/// every unit arrow and is closed under inverse and composition.
pub fn subgroupoid_check(g: &FiniteGroupoid, subset: &[ArrowIx]) -> Result<(), PosdefError> {
    let set: HashSet<ArrowIx> = subset.iter().copied().collect();
    for x in g.units() {
        if !set.contains(&g.unit_arrow(x)) {
            return Err(PosdefError::NotSubgroupoid(format!(
                "missing unit arrow at {}",
                g.unit_id(x)
            )));
        }
    }
    for &a in &set {
        if !set.contains(&g.inverse(a)) {
            return Err(PosdefError::NotSubgroupoid(format!(
                "not closed under inverse at {}",
                g.arrow_id(a)
            )));
        }
        for &b in &set {
            if let Some(ab) = g.compose(a, b) {
                if !set.contains(&ab) {
                    return Err(PosdefError::NotSubgroupoid(format!(
                        "not closed under composition at ({}, {})",
                        g.arrow_id(a),
                        g.arrow_id(b)
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Closure of an arrow set under inverse and composition, with all unit
/// arrows added; the subgroupoid generated by the set.
pub fn subgroupoid_generated(g: &FiniteGroupoid, seed: &[ArrowIx]) -> Vec<ArrowIx> {
    let mut set: HashSet<ArrowIx> = seed.iter().copied().collect();
    for x in g.units() {
        set.insert(g.unit_arrow(x));
    }
    loop {
        let mut grew = false;
        let current: Vec<ArrowIx> = set.iter().copied().collect();
        for &a in &current {
            if set.insert(g.inverse(a)) {
                grew = true;
            }
            for &b in &current {
                if let Some(ab) = g.compose(a, b) {
                    if set.insert(ab) {
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }
    let mut out: Vec<ArrowIx> = set.into_iter().collect();
    out.sort_unstable();
    out
}

/// Extend a function that is positive definite on a subgroupoid H (same
/// units) by zero to the whole groupoid. The result is again positive
/// definite.
pub fn extend_by_zero(
    f: &ArrowFunction,
    subgroupoid: &[ArrowIx],
    tol: f64,
) -> Result<ArrowFunction, PosdefError> {
    let g = f.groupoid();
    subgroupoid_check(g, subgroupoid)?;
    let report = is_positive_definite_on(f, subgroupoid, tol);
    if !report.is_pd {
        return Err(PosdefError::NotPositiveDefinite);
    }
    let set: HashSet<ArrowIx> = subgroupoid.iter().copied().collect();
    let mut out = ArrowFunction::zero(g);
    for &a in &set {
        out.set(a, f.value(a));
    }
    Ok(out)
}

/// psi = sum_k alpha_k Re(1 - F_k) for positive definite F_k with unit
/// restriction 1; conditionally negative definite by construction.
pub fn cnd_from_pd_sequence(
    fs: &[ArrowFunction],
    alphas: &[f64],
    tol: f64,
) -> Result<ArrowFunction, PosdefError> {
    if fs.len() != alphas.len() {
        return Err(PosdefError::WeightMismatch);
    }
    let g = fs.first().expect("nonempty sequence").groupoid();
    for f in fs {
        let unit_defect = g
            .units()
            .map(|x| (f.value(g.unit_arrow(x)) - Complex64::ONE).norm())
            .fold(0.0_f64, f64::max);
        if unit_defect > tol {
            return Err(PosdefError::UnitValueNotOne(unit_defect));
        }
        if !is_positive_definite(f, tol).is_pd {
            return Err(PosdefError::NotPositiveDefinite);
        }
    }
    let mut psi = ArrowFunction::zero(g);
    for a in g.arrows() {
        let v: f64 = fs
            .iter()
            .zip(alphas)
            .map(|(f, &alpha)| alpha * (1.0 - f.value(a).re))
            .sum();
        psi.set(a, Complex64::new(v, 0.0));
    }
    Ok(psi)
}

/// What a properness profile measures.
#[derive(Debug, Clone, Copy)]
pub enum ProfileQuery {
    /// nu-mass of { |F| > threshold }
    AbsAbove(f64),
    /// nu-mass of { psi <= threshold }
    Below(f64),
}

/// One exact-mass profile entry.
#[derive(Debug, Clone)]
pub struct ProfileEntry {
    pub threshold: f64,
    pub mass: Rational64,
    pub count: usize,
}

/// Exact rational nu-masses of sublevel or superlevel sets; at finite scale
/// these are always finite and serve as witness documentation.
pub fn properness_profile(f: &ArrowFunction, queries: &[ProfileQuery]) -> Vec<ProfileEntry> {
    let g = f.groupoid();
    queries
        .iter()
        .map(|q| {
            let (threshold, selected): (f64, Vec<ArrowIx>) = match *q {
                ProfileQuery::AbsAbove(eps) => {
                    (eps, g.arrows().filter(|&a| f.value(a).norm() > eps).collect())
                }
                ProfileQuery::Below(c) => {
                    (c, g.arrows().filter(|&a| f.value(a).re <= c).collect())
                }
            };
            let mass = selected.iter().map(|&a| g.mass(g.source(a))).fold(Rational64::zero(), |s, m| s + m);
            ProfileEntry { threshold, mass, count: selected.len() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-10;

    fn constant_one(g: &std::sync::Arc<FiniteGroupoid>) -> ArrowFunction {
        ArrowFunction::from_values(g, vec![Complex64::ONE; g.n_arrows()])
    }

    #[test]
    fn all_ones_is_pd() {
        let g = fixtures::r2();
        let report = is_positive_definite(&constant_one(&g), TOL);
        assert!(report.is_pd);
        // Rank-one all-ones fibre blocks: min eigenvalue 0.
        assert!(report.min_eig().abs() < 1e-12);
    }

    #[test]
    fn unit_indicator_is_pd() {
        for g in fixtures::all() {
            let report = is_positive_definite(&ArrowFunction::unit_indicator(&g), TOL);
            assert!(report.is_pd);
            assert!((report.min_eig() - 1.0).abs() < 1e-12, "identity Gram blocks");
        }
    }

    #[test]
    fn exponential_kernel_r2_eigenvalue() {
        let g = fixtures::r2();
        let mut f = constant_one(&g);
        let e1 = Complex64::new((-1.0f64).exp(), 0.0);
        f.set_by_id("ab", e1).unwrap();
        f.set_by_id("ba", e1).unwrap();
        let report = is_positive_definite(&f, TOL);
        assert!(report.is_pd);
        let expected = 1.0 - (-1.0f64).exp();
        assert!((report.min_eig() - expected).abs() < 1e-12);
    }

    #[test]
    fn non_pd_detected() {
        let g = fixtures::r2();
        let mut f = ArrowFunction::unit_indicator(&g);
        f.set_by_id("ab", Complex64::new(2.0, 0.0)).unwrap();
        f.set_by_id("ba", Complex64::new(2.0, 0.0)).unwrap();
        assert!(!is_positive_definite(&f, TOL).is_pd);
    }

    #[test]
    fn pd_implies_hermitian_symmetry_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for g in fixtures::all() {
            for _ in 0..10 {
                let f = sample::random_pd(&g, &mut rng);
                assert!(is_positive_definite(&f, TOL).is_pd);
                for a in g.arrows() {
                    let sym = (f.value(g.inverse(a)).conj() - f.value(a)).norm();
                    assert!(sym < 1e-10, "F(a^-1) = conj F(a)");
                    assert!(f.value(a).norm() <= 1.0 + 1e-10, "|F| <= 1 when F|_X = 1");
                }
            }
        }
    }

    #[test]
    fn zero_is_cnd() {
        for g in fixtures::all() {
            let psi = ArrowFunction::zero(&g);
            assert!(is_cnd(&psi, TOL).unwrap().is_cnd);
        }
    }

    #[test]
    fn r2_tree_distance_is_cnd() {
        let g = fixtures::r2();
        let mut psi = ArrowFunction::zero(&g);
        psi.set_by_id("ab", Complex64::ONE).unwrap();
        psi.set_by_id("ba", Complex64::ONE).unwrap();
        let report = is_cnd(&psi, TOL).unwrap();
        assert!(report.is_cnd);
        assert!(report.min_value >= 0.0);
    }

    #[test]
    fn one_minus_re_pd_is_cnd() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for g in fixtures::all() {
            let f = sample::random_pd(&g, &mut rng);
            let psi = cnd_from_pd_sequence(&[f], &[1.0], TOL).unwrap();
            assert!(is_cnd(&psi, TOL).unwrap().is_cnd);
        }
    }

    #[test]
    fn complex_input_rejected_by_cnd() {
        let g = fixtures::r2();
        let mut psi = ArrowFunction::zero(&g);
        psi.set_by_id("ab", Complex64::new(0.0, 0.5)).unwrap();
        assert!(matches!(is_cnd(&psi, TOL), Err(PosdefError::NonRealInput)));
    }

    #[test]
    fn schoenberg_constant() {
        let g = fixtures::r3();
        let psi = ArrowFunction::zero(&g);
        let f = schoenberg(&psi, 2.0, TOL).unwrap();
        assert!(f.max_deviation(&constant_one(&g)) == 0.0);
    }

    #[test]
    fn schoenberg_tree_psi_r2() {
        let g = fixtures::r2();
        let mut psi = ArrowFunction::zero(&g);
        psi.set_by_id("ab", Complex64::ONE).unwrap();
        psi.set_by_id("ba", Complex64::ONE).unwrap();
        let f = schoenberg(&psi, 1.0, TOL).unwrap();
        assert!((f.value_by_id("ab").unwrap().re - (-1.0f64).exp()).abs() < 1e-15);
        assert!(is_positive_definite(&f, TOL).is_pd);
    }

    #[test]
    fn schoenberg_rejects_non_cnd() {
        let g = fixtures::r2();
        let mut psi = ArrowFunction::zero(&g);
        // Fails the unit-vanishing requirement.
        psi.set_by_id("aa", Complex64::ONE).unwrap();
        assert!(matches!(schoenberg(&psi, 1.0, TOL), Err(PosdefError::NotCnd)));
    }

    #[test]
    fn subgroupoid_closure_and_check() {
        let g = fixtures::r3();
        let ab = g.arrow_ix("ab").unwrap();
        let sub = subgroupoid_generated(&g, &[ab]);
        assert!(subgroupoid_check(&g, &sub).is_ok());
        // ab generates the R2 part plus the unit at c.
        assert_eq!(sub.len(), 5);
        assert!(subgroupoid_check(&g, &[ab]).is_err());
    }

    #[test]
    fn extend_by_zero_unit_case() {
        let g = fixtures::r3();
        let units: Vec<ArrowIx> = g.units().map(|x| g.unit_arrow(x)).collect();
        let f = ArrowFunction::unit_indicator(&g);
        let ext = extend_by_zero(&f, &units, TOL).unwrap();
        assert!(ext.max_deviation(&f) == 0.0);
        assert!(is_positive_definite(&ext, TOL).is_pd);
    }

    #[test]
    fn extend_by_zero_r2_in_r3() {
        let g = fixtures::r3();
        let ab = g.arrow_ix("ab").unwrap();
        let sub = subgroupoid_generated(&g, &[ab]);
        let f = constant_one(&g);
        let ext = extend_by_zero(&f, &sub, TOL).unwrap();
        assert!(is_positive_definite(&ext, TOL).is_pd);
        assert_eq!(ext.value_by_id("ac").unwrap(), Complex64::ZERO);
        assert_eq!(ext.value_by_id("ab").unwrap(), Complex64::ONE);
    }

    #[test]
    fn extend_by_zero_group_character() {
        // Z2 x Z2 realized as an action groupoid is overkill; use the s3
        // fixture's rotation subgroup instead: H = {e, r, rr} inside S3 and
        // a character of H.
        let g = fixtures::s3();
        let h: Vec<ArrowIx> = ["e", "r", "rr"].iter().map(|id| g.arrow_ix(id).unwrap()).collect();
        let sub = subgroupoid_generated(&g, &h);
        assert_eq!(sub.len(), 3);
        let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let mut f = ArrowFunction::zero(&g);
        f.set_by_id("e", Complex64::ONE).unwrap();
        f.set_by_id("r", omega).unwrap();
        f.set_by_id("rr", omega * omega).unwrap();
        let ext = extend_by_zero(&f, &sub, TOL).unwrap();
        assert!(is_positive_definite(&ext, TOL).is_pd);
    }

    #[test]
    fn extend_by_zero_rejects_non_pd() {
        let g = fixtures::r3();
        let ab = g.arrow_ix("ab").unwrap();
        let sub = subgroupoid_generated(&g, &[ab]);
        let mut f = constant_one(&g);
        f.set_by_id("ab", Complex64::new(3.0, 0.0)).unwrap();
        f.set_by_id("ba", Complex64::new(3.0, 0.0)).unwrap();
        assert!(matches!(
            extend_by_zero(&f, &sub, TOL),
            Err(PosdefError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn random_extension_preserves_pd() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for g in [fixtures::r3(), fixtures::s3(), fixtures::z2_swap()] {
            for _ in 0..25 {
                let sub = sample::random_subgroupoid(&g, &mut rng);
                let f = sample::random_pd_on(&g, &sub, &mut rng);
                let ext = extend_by_zero(&f, &sub, 1e-8).unwrap();
                assert!(is_positive_definite(&ext, 1e-8).is_pd);
            }
        }
    }

    #[test]
    fn profile_masses() {
        let g = fixtures::r2();
        let f = constant_one(&g);
        let entries = properness_profile(&f, &[ProfileQuery::AbsAbove(0.5)]);
        assert_eq!(entries[0].mass, Rational64::new(2, 1));

        let mut psi = ArrowFunction::zero(&g);
        psi.set_by_id("ab", Complex64::ONE).unwrap();
        psi.set_by_id("ba", Complex64::ONE).unwrap();
        let entries = properness_profile(&psi, &[ProfileQuery::Below(0.0), ProfileQuery::Below(1.0)]);
        assert_eq!(entries[0].mass, Rational64::new(1, 1), "only unit arrows at distance 0");
        assert_eq!(entries[1].mass, Rational64::new(2, 1));
    }

    #[test]
    fn schoenberg_products_and_mixtures_stay_pd() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for g in fixtures::all() {
            let f1 = sample::random_pd(&g, &mut rng);
            let f2 = sample::random_pd(&g, &mut rng);
            let product = f1.pointwise_mul(&f2).unwrap();
            assert!(is_positive_definite(&product, 1e-9).is_pd);
            let mix = f1.scale(Complex64::new(0.3, 0.0)).add(&f2.scale(Complex64::new(0.7, 0.0))).unwrap();
            assert!(is_positive_definite(&mix, 1e-9).is_pd);
        }
    }
}
