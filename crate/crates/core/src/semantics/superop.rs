use crate::error::{Error, Result};
use crate::linalg::general::spectral_radius;
use crate::linalg::solve::inverse;
use crate::linalg::{superop_matrix, Matrix};

use super::compile::Node;

/// Spectral radius bound under which the closed form is used.
pub const RADIUS_CUTOFF: f64 = 1.0 - 1e-6;
pub const SERIES_TOL: f64 = 1e-10;
pub const SERIES_MAX_TERMS: usize = 100_000;

/// Vectorized matrix of a node: column i·d+j holds vec(⟦node⟧(|i⟩⟨j|)).
pub fn node_matrix(node: &Node) -> Result<Matrix> {
    match node {
        Node::Kraus { ops, .. } => superop_matrix(ops),
        Node::Loop { .. } => node.loop_superop().cloned(),
        Node::Skip { dim } => Ok(Matrix::identity(dim * dim)),
        _ => {
            let (di, dout) = (node.d_in(), node.d_out());
            let mut out = Matrix::zeros(dout * dout, di * di);
            for i in 0..di {
                for j in 0..di {
                    let r = node.apply(&Matrix::unit(di, i, j))?;
                    out.set_column(i * di + j, r.data());
                }
            }
            Ok(out)
        }
    }
}

/// Σₙ Â₀ (Â_body Â₁)ⁿ, by the resolvent when the iteration map is a strict
/// contraction and by a doubling series otherwise.
pub fn loop_matrix(m0: &Matrix, m1: &Matrix, body: &Node) -> std::result::Result<Matrix, Error> {
    let a0 = superop_matrix(std::slice::from_ref(m0))?;
    let a1 = superop_matrix(std::slice::from_ref(m1))?;
    let b = node_matrix(body)?;
    let t = b.matmul(&a1);
    let n = t.rows();
    if spectral_radius(&t).map(|r| r < RADIUS_CUTOFF).unwrap_or(false) {
        let resolvent = inverse(&(&Matrix::identity(n) - &t))?;
        return Ok(a0.matmul(&resolvent));
    }
    // Doubling: S_{2m} = S_m + A0 T^m G_m with G_m = Σ_{k<m} T^k.
    let mut g = Matrix::identity(n);
    let mut tm = t.clone();
    let mut terms = 1usize;
    loop {
        let head = a0.matmul(&tm);
        if head.max_abs() < SERIES_TOL {
            return Ok(a0.matmul(&g));
        }
        if terms * 2 > SERIES_MAX_TERMS {
            return Err(Error::Divergence(format!(
                "series not converged after {terms} terms (tail {:.2e})",
                head.max_abs()
            )));
        }
        g = &g + &tm.matmul(&g);
        tm = tm.matmul(&tm);
        terms *= 2;
    }
}

/// Partial sums Σ_{n<N} Â₀(Â_body Â₁)ⁿ for N = 1..=count.
pub fn loop_truncations(m0: &Matrix, m1: &Matrix, body: &Node, count: usize) -> Result<Vec<Matrix>> {
    let a0 = superop_matrix(std::slice::from_ref(m0))?;
    let a1 = superop_matrix(std::slice::from_ref(m1))?;
    let t = node_matrix(body)?.matmul(&a1);
    let mut out = Vec::with_capacity(count);
    let mut term = a0.clone();
    let mut acc = Matrix::zeros(a0.rows(), a0.cols());
    for _ in 0..count {
        acc = &acc + &term;
        out.push(acc.clone());
        term = term.matmul(&t);
    }
    Ok(out)
}
