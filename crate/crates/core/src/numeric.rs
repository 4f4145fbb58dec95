//! Shared dense-matrix helpers for the per-fibre eigenproblems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigenvalues of a Hermitian matrix, after explicit symmetrization.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> DVector<f64> {
    if m.is_empty() {
        return DVector::zeros(0);
    }
    let herm = (m + m.adjoint()).map(|v| v * 0.5);
    nalgebra::SymmetricEigen::new(herm).eigenvalues
}

/// Full Hermitian eigendecomposition (eigenvalues, eigenvectors as columns).
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let herm = (m + m.adjoint()).map(|v| v * 0.5);
    let eig = nalgebra::SymmetricEigen::new(herm);
    (eig.eigenvalues, eig.eigenvectors)
}

/// Matrix infinity norm (max absolute row sum).
pub fn inf_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum())
        .fold(0.0_f64, f64::max)
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Hermiticity defect: largest entry of m - m^*.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// PSD square root by eigendecomposition. Eigenvalues in [-clamp_tol, 0)
/// are clamped to zero; anything lower is reported as the error value.
pub fn psd_sqrt(m: &DMatrix<Complex64>, clamp_tol: f64) -> Result<DMatrix<Complex64>, f64> {
    let (vals, vecs) = hermitian_eigen(m);
    let mut roots = DVector::zeros(vals.len());
    for (i, &v) in vals.iter().enumerate() {
        if v < -clamp_tol {
            return Err(v);
        }
        roots[i] = v.max(0.0).sqrt();
    }
    let scaled: DMatrix<Complex64> = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| {
        vecs[(i, j)] * roots[j]
    });
    Ok(&scaled * vecs.adjoint())
}
