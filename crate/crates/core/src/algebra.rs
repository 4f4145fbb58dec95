//! The convolution *-algebra of a finite groupoid: arrow functions, the
//! I-norm, the left regular representation as per-fibre matrices, and right
//! convolution with its norm bound.
//!
//! A single [`ArrowFunction`] type plays both roles of an algebra element
//! and of a vector of the nu-weighted L^2 space; at finite scale every
//! function lies in both.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::groupoid::{measures, ArrowIx, FiniteGroupoid, UnitIx};

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("arrow functions live on different groupoids")]
    GroupoidMismatch,
    #[error("unknown arrow id {0:?}")]
    UnknownArrow(String),
}

/// A complex-valued function on the arrows of a fixed groupoid.
#[derive(Debug, Clone)]
pub struct ArrowFunction {
    groupoid: Arc<FiniteGroupoid>,
    values: Vec<Complex64>,
}

impl ArrowFunction {
    pub fn zero(g: &Arc<FiniteGroupoid>) -> Self {
        ArrowFunction { groupoid: g.clone(), values: vec![Complex64::ZERO; g.n_arrows()] }
    }

    pub fn from_values(g: &Arc<FiniteGroupoid>, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), g.n_arrows());
        ArrowFunction { groupoid: g.clone(), values }
    }

    /// Indicator of an arrow set.
    pub fn indicator(g: &Arc<FiniteGroupoid>, arrows: &[ArrowIx]) -> Self {
        let mut f = Self::zero(g);
        for &a in arrows {
            f.values[a] = Complex64::ONE;
        }
        f
    }

    /// Point mass at a single arrow.
    pub fn point_mass(g: &Arc<FiniteGroupoid>, a: ArrowIx) -> Self {
        Self::indicator(g, &[a])
    }

    /// The identity of the algebra: indicator of the unit arrows.
    pub fn unit_indicator(g: &Arc<FiniteGroupoid>) -> Self {
        let units: Vec<ArrowIx> = g.units().map(|x| g.unit_arrow(x)).collect();
        Self::indicator(g, &units)
    }

    pub fn groupoid(&self) -> &Arc<FiniteGroupoid> {
        &self.groupoid
    }

    pub fn value(&self, a: ArrowIx) -> Complex64 {
        self.values[a]
    }

    pub fn set(&mut self, a: ArrowIx, v: Complex64) {
        self.values[a] = v;
    }

    /// Value by arrow id; errors on unknown ids.
    pub fn value_by_id(&self, id: &str) -> Result<Complex64, AlgebraError> {
        self.groupoid
            .arrow_ix(id)
            .map(|a| self.values[a])
            .ok_or_else(|| AlgebraError::UnknownArrow(id.to_string()))
    }

    pub fn set_by_id(&mut self, id: &str, v: Complex64) -> Result<(), AlgebraError> {
        let a = self
            .groupoid
            .arrow_ix(id)
            .ok_or_else(|| AlgebraError::UnknownArrow(id.to_string()))?;
        self.values[a] = v;
        Ok(())
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn same_groupoid(&self, other: &ArrowFunction) -> bool {
        Arc::ptr_eq(&self.groupoid, &other.groupoid) || self.groupoid.same_as(&other.groupoid)
    }

    fn check_same(&self, other: &ArrowFunction) -> Result<(), AlgebraError> {
        if self.same_groupoid(other) {
            Ok(())
        } else {
            Err(AlgebraError::GroupoidMismatch)
        }
    }

    pub fn add(&self, other: &ArrowFunction) -> Result<ArrowFunction, AlgebraError> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(ArrowFunction { groupoid: self.groupoid.clone(), values })
    }

    pub fn sub(&self, other: &ArrowFunction) -> Result<ArrowFunction, AlgebraError> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(ArrowFunction { groupoid: self.groupoid.clone(), values })
    }

    pub fn scale(&self, c: Complex64) -> ArrowFunction {
        ArrowFunction {
            groupoid: self.groupoid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Pointwise product (used for multiplier maps f -> F f).
    pub fn pointwise_mul(&self, other: &ArrowFunction) -> Result<ArrowFunction, AlgebraError> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(ArrowFunction { groupoid: self.groupoid.clone(), values })
    }

    /// Apply a scalar map pointwise.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ArrowFunction {
        ArrowFunction {
            groupoid: self.groupoid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Real part, as a new (real-valued) arrow function.
    pub fn re(&self) -> ArrowFunction {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest pointwise deviation from another function.
    pub fn max_deviation(&self, other: &ArrowFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn support(&self) -> Vec<ArrowIx> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != Complex64::ZERO)
            .map(|(a, _)| a)
            .collect()
    }

    /// Convolution product (f*g)(c) = sum over ab = c of f(a) g(b).
    pub fn convolve(&self, other: &ArrowFunction) -> Result<ArrowFunction, AlgebraError> {
        self.check_same(other)?;
        let g = &self.groupoid;
        let mut out = vec![Complex64::ZERO; g.n_arrows()];
        for (a, b, ab) in g.composable_pairs() {
            let fa = self.values[a];
            if fa == Complex64::ZERO {
                continue;
            }
            out[ab] += fa * other.values[b];
        }
        Ok(ArrowFunction { groupoid: self.groupoid.clone(), values: out })
    }

    /// Involution f*(a) = conj(f(a^{-1})).
    pub fn involute(&self) -> ArrowFunction {
        let g = &self.groupoid;
        let values = g.arrows().map(|a| self.values[g.inverse(a)].conj()).collect();
        ArrowFunction { groupoid: self.groupoid.clone(), values }
    }

    /// I-norm: the larger of the max fibrewise absolute row and column sums.
    pub fn i_norm(&self) -> f64 {
        let g = &self.groupoid;
        let mut best: f64 = 0.0;
        for x in g.units() {
            let row: f64 = g.range_fibre(x).iter().map(|&a| self.values[a].norm()).sum();
            let col: f64 = g.source_fibre(x).iter().map(|&a| self.values[a].norm()).sum();
            best = best.max(row).max(col);
        }
        best
    }

    /// nu-weighted squared L^2 norm.
    pub fn l2_norm_sq(&self) -> f64 {
        let g = &self.groupoid;
        g.arrows().map(|a| self.values[a].norm_sqr() * g.mass_f64(g.source(a))).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// nu-weighted inner product, conjugate-linear in the first slot.
    pub fn l2_inner(&self, other: &ArrowFunction) -> Result<Complex64, AlgebraError> {
        self.check_same(other)?;
        let g = &self.groupoid;
        Ok(g
            .arrows()
            .map(|a| self.values[a].conj() * other.values[a] * g.mass_f64(g.source(a)))
            .sum())
    }
}

/// Which fibre family indexes the blocks of a decomposable operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FibreSide {
    /// Blocks act on the source fibres G_x (the regular-representation side).
    Source,
    /// Blocks act on the range fibres G^x.
    Range,
}

/// A family of complex matrices indexed by units, acting on the chosen
/// fibres with basis the fibre arrows in input order.
#[derive(Debug, Clone)]
pub struct FibreOperator {
    groupoid: Arc<FiniteGroupoid>,
    side: FibreSide,
    blocks: Vec<DMatrix<Complex64>>,
}

impl FibreOperator {
    pub fn new(
        g: &Arc<FiniteGroupoid>,
        side: FibreSide,
        blocks: Vec<DMatrix<Complex64>>,
    ) -> Self {
        assert_eq!(blocks.len(), g.n_units());
        for x in g.units() {
            let dim = Self::fibre_of(g, side, x).len();
            assert_eq!(blocks[x].nrows(), dim, "block size mismatch at unit {x}");
            assert_eq!(blocks[x].ncols(), dim, "block size mismatch at unit {x}");
        }
        FibreOperator { groupoid: g.clone(), side, blocks }
    }

    fn fibre_of<'a>(g: &'a FiniteGroupoid, side: FibreSide, x: UnitIx) -> &'a [ArrowIx] {
        match side {
            FibreSide::Source => g.source_fibre(x),
            FibreSide::Range => g.range_fibre(x),
        }
    }

    pub fn identity(g: &Arc<FiniteGroupoid>, side: FibreSide) -> Self {
        let blocks = g
            .units()
            .map(|x| DMatrix::identity(Self::fibre_of(g, side, x).len(), Self::fibre_of(g, side, x).len()))
            .collect();
        FibreOperator { groupoid: g.clone(), side, blocks }
    }

    pub fn groupoid(&self) -> &Arc<FiniteGroupoid> {
        &self.groupoid
    }

    pub fn side(&self) -> FibreSide {
        self.side
    }

    pub fn block(&self, x: UnitIx) -> &DMatrix<Complex64> {
        &self.blocks[x]
    }

    pub fn fibre(&self, x: UnitIx) -> &[ArrowIx] {
        Self::fibre_of(&self.groupoid, self.side, x)
    }

    /// Apply blockwise to an arrow function viewed as a vector.
    pub fn apply(&self, f: &ArrowFunction) -> ArrowFunction {
        let g = &self.groupoid;
        let mut out = ArrowFunction::zero(g);
        for x in g.units() {
            let fibre = self.fibre(x);
            let v = DVector::from_iterator(fibre.len(), fibre.iter().map(|&a| f.value(a)));
            let w = &self.blocks[x] * v;
            for (i, &a) in fibre.iter().enumerate() {
                out.set(a, w[i]);
            }
        }
        out
    }

    /// Blockwise product; sides must agree.
    pub fn mul(&self, other: &FibreOperator) -> FibreOperator {
        assert_eq!(self.side, other.side);
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect();
        FibreOperator { groupoid: self.groupoid.clone(), side: self.side, blocks }
    }

    pub fn adjoint(&self) -> FibreOperator {
        let blocks = self.blocks.iter().map(|b| b.adjoint()).collect();
        FibreOperator { groupoid: self.groupoid.clone(), side: self.side, blocks }
    }

    pub fn sub(&self, other: &FibreOperator) -> FibreOperator {
        assert_eq!(self.side, other.side);
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect();
        FibreOperator { groupoid: self.groupoid.clone(), side: self.side, blocks }
    }

    pub fn scale(&self, c: Complex64) -> FibreOperator {
        let blocks = self.blocks.iter().map(|b| b.map(|v| c * v)).collect();
        FibreOperator { groupoid: self.groupoid.clone(), side: self.side, blocks }
    }

    /// Operator norm: the largest block spectral norm.
    pub fn op_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| if b.is_empty() { 0.0 } else { b.clone().singular_values().max() })
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry over all blocks.
    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from another operator of the same side.
    pub fn max_deviation(&self, other: &FibreOperator) -> f64 {
        assert_eq!(self.side, other.side);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Deviation from being Hermitian, blockwise.
    pub fn hermitian_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b - b.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue over all blocks, after Hermitian symmetrization.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|b| !b.is_empty())
            .map(|b| {
                let herm = (b + b.adjoint()).map(|v| v * 0.5);
                nalgebra::SymmetricEigen::new(herm).eigenvalues.min()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Left regular representation of f as a family of source-fibre matrices:
/// the block at x sends xi to f * xi on l^2(G_x).
pub fn regular_rep(f: &ArrowFunction) -> FibreOperator {
    let g = f.groupoid();
    let blocks = g
        .units()
        .map(|x| {
            let fibre = g.source_fibre(x);
            DMatrix::from_fn(fibre.len(), fibre.len(), |i, j| {
                // entry (c, b) = f(c b^{-1}) when composable
                match g.compose(fibre[i], g.inverse(fibre[j])) {
                    Some(a) => f.value(a),
                    None => Complex64::ZERO,
                }
            })
        })
        .collect();
    FibreOperator::new(g, FibreSide::Source, blocks)
}

/// Certified bound accompanying a right convolution.
#[derive(Debug, Clone, Copy)]
pub struct RightConvolveBound {
    /// Attained norm of xi * g.
    pub norm: f64,
    /// The I-norm bound taken through delta^{-1/2} g.
    pub bound: f64,
}

/// Right convolution xi * g together with the norm bound pair
/// (|xi * g|_2, |delta^{-1/2} g|_I |xi|_2).
pub fn right_convolve(
    xi: &ArrowFunction,
    g_fn: &ArrowFunction,
) -> Result<(ArrowFunction, RightConvolveBound), AlgebraError> {
    let out = xi.convolve(g_fn)?;
    let g = xi.groupoid();
    let m = measures(g);
    let weighted = ArrowFunction::from_values(
        g,
        g.arrows().map(|a| g_fn.value(a) / m.delta_f64(a).sqrt()).collect(),
    );
    let bound = RightConvolveBound { norm: out.l2_norm(), bound: weighted.i_norm() * xi.l2_norm() };
    Ok((out, bound))
}
