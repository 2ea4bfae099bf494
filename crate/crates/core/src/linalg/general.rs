//! Non-Hermitian spectral helpers backed by nalgebra.

use nalgebra::{DMatrix, Schur};

use super::matrix::{Matrix, C64};
use crate::error::{Error, Result};

fn to_na(m: &Matrix) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// All eigenvalues of a square complex matrix (complex Schur form).
pub fn eigenvalues(m: &Matrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::dim("eigenvalues of a non-square matrix"));
    }
    if m.rows() == 0 {
        return Ok(vec![]);
    }
    let s = Schur::try_new(to_na(m), 1e-14, 10_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = s.unpack();
    Ok((0..m.rows()).map(|i| t[(i, i)]).collect())
}

pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Orthonormal basis of {x : m x ≈ 0}, from singular values below `tol`
/// times the largest one.
pub fn null_space(m: &Matrix, tol: f64) -> Vec<Vec<C64>> {
    let n = m.cols();
    if n == 0 {
        return vec![];
    }
    // Pad to square so the SVD returns a full right basis.
    let rows = m.rows().max(n);
    let mut a = DMatrix::<C64>::zeros(rows, n);
    for i in 0..m.rows() {
        for j in 0..n {
            a[(i, j)] = m[(i, j)];
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = tol * top.max(1.0);
    (0..n)
        .filter(|&k| svd.singular_values[k] <= cut)
        .map(|k| (0..n).map(|j| vt[(k, j)].conj()).collect())
        .collect()
}
