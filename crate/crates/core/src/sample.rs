//! Seeded random generators for functions, positive definite functions,
//! unit fields and subgroupoids. Used by the randomized check suites and by
//! the test oracles; all randomness flows through a caller-supplied RNG so
//! reports stay reproducible.

use std::collections::HashSet;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::ArrowFunction;
use crate::groupoid::{ArrowIx, FiniteGroupoid};
use crate::posdef::subgroupoid_generated;

fn random_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Arrow function with independent complex entries in the unit box.
pub fn random_function(g: &Arc<FiniteGroupoid>, rng: &mut impl Rng) -> ArrowFunction {
    ArrowFunction::from_values(g, (0..g.n_arrows()).map(|_| random_complex(rng)).collect())
}

/// Real-valued arrow function with entries in [-1, 1].
pub fn random_real_function(g: &Arc<FiniteGroupoid>, rng: &mut impl Rng) -> ArrowFunction {
    ArrowFunction::from_values(
        g,
        (0..g.n_arrows()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0)).collect(),
    )
}

/// A field normalized to a unit vector on every range fibre G^x.
pub fn random_unit_field(g: &Arc<FiniteGroupoid>, rng: &mut impl Rng) -> ArrowFunction {
    let mut xi = random_function(g, rng);
    for x in g.units() {
        let fibre = g.range_fibre(x);
        let norm: f64 = fibre.iter().map(|&a| xi.value(a).norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-9 {
            for &a in fibre {
                xi.set(a, Complex64::ZERO);
            }
            xi.set(g.unit_arrow(x), Complex64::ONE);
        } else {
            for &a in fibre {
                xi.set(a, xi.value(a) / norm);
            }
        }
    }
    xi
}

/// Random positive definite function with unit restriction 1, supported on
/// a subgroupoid, built as a coefficient of the fibrewise shift action of a
/// random field. Values off the subgroupoid are zero.
pub fn random_pd_on(
    g: &Arc<FiniteGroupoid>,
    subgroupoid: &[ArrowIx],
    rng: &mut impl Rng,
) -> ArrowFunction {
    let set: HashSet<ArrowIx> = subgroupoid.iter().copied().collect();
    // Random field normalized per restricted fibre. Values are drawn in
    // input arrow order so a given rng state always yields the same field.
    let mut xi = ArrowFunction::zero(g);
    for a in g.arrows().filter(|a| set.contains(a)) {
        xi.set(a, random_complex(rng));
    }
    for x in g.units() {
        let fibre: Vec<ArrowIx> =
            g.range_fibre(x).iter().copied().filter(|a| set.contains(a)).collect();
        let norm: f64 = fibre.iter().map(|&a| xi.value(a).norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-9 {
            for &a in &fibre {
                xi.set(a, Complex64::ZERO);
            }
            xi.set(g.unit_arrow(x), Complex64::ONE);
        } else {
            for &a in &fibre {
                xi.set(a, xi.value(a) / norm);
            }
        }
    }
    // Coefficient of the shift: F(c) = sum over g1 in H^{r(c)} of
    // conj(xi(g1)) xi(c^{-1} g1).
    let mut f = ArrowFunction::zero(g);
    for &c in &set {
        let mut acc = Complex64::ZERO;
        for &g1 in g.range_fibre(g.range(c)) {
            if !set.contains(&g1) {
                continue;
            }
            let shifted = g.compose(g.inverse(c), g1).expect("same range fibre");
            acc += xi.value(g1).conj() * xi.value(shifted);
        }
        f.set(c, acc);
    }
    f
}

/// Random positive definite function on the whole groupoid, F|_X = 1.
pub fn random_pd(g: &Arc<FiniteGroupoid>, rng: &mut impl Rng) -> ArrowFunction {
    let all: Vec<ArrowIx> = g.arrows().collect();
    random_pd_on(g, &all, rng)
}

/// Random positive definite function mixed with the unit indicator; the
/// mixing keeps every fibre Gram matrix well conditioned.
pub fn random_pd_regularized(
    g: &Arc<FiniteGroupoid>,
    alpha: f64,
    rng: &mut impl Rng,
) -> ArrowFunction {
    let f = random_pd(g, rng);
    let one_x = ArrowFunction::unit_indicator(g);
    f.scale(Complex64::new(1.0 - alpha, 0.0))
        .add(&one_x.scale(Complex64::new(alpha, 0.0)))
        .expect("same groupoid")
}

/// A designed non positive definite function: 1 on units, modulus 2 at a
/// non-unit arrow pair (a, a^{-1}), Hermitian-symmetric. Returns `None` on
/// groupoids with unit arrows only.
pub fn random_non_pd(g: &Arc<FiniteGroupoid>, rng: &mut impl Rng) -> Option<ArrowFunction> {
    let non_units: Vec<ArrowIx> = g.arrows().filter(|&a| !g.is_unit_arrow(a)).collect();
    if non_units.is_empty() {
        return None;
    }
    let a = non_units[rng.random_range(0..non_units.len())];
    let mut f = ArrowFunction::unit_indicator(g);
    if g.inverse(a) == a {
        f.set(a, Complex64::new(2.0, 0.0));
    } else {
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let v = Complex64::from_polar(2.0, phase);
        f.set(a, v);
        f.set(g.inverse(a), v.conj());
    }
    Some(f)
}

/// Random subgroupoid (over all units), as the closure of a random arrow
/// subset.
pub fn random_subgroupoid(g: &Arc<FiniteGroupoid>, rng: &mut impl Rng) -> Vec<ArrowIx> {
    let seed: Vec<ArrowIx> = g.arrows().filter(|_| rng.random_bool(0.35)).collect();
    subgroupoid_generated(g, &seed)
}
