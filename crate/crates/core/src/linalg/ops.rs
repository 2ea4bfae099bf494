use super::eigen::{eigh, eigvalsh};
use super::matrix::{Matrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Default absolute tolerance for numerical comparisons.
pub const TOL: f64 = 1e-9;

/// Relative eigenvalue cutoff used by [`support_projector`].
pub const RANK_TOL: f64 = 1e-8;

fn check_square_pair(a: &Matrix, b: &Matrix) -> Result<()> {
    if !a.is_square() || a.dims() != b.dims() {
        return Err(Error::dim(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

pub fn min_eigenvalue(a: &Matrix) -> Result<f64> {
    Ok(eigvalsh(a)?.first().copied().unwrap_or(0.0))
}

pub fn max_eigenvalue(a: &Matrix) -> Result<f64> {
    Ok(eigvalsh(a)?.last().copied().unwrap_or(0.0))
}

/// A ⊑ B in the Löwner order: B − A has no eigenvalue below −tol.
pub fn loewner_leq(a: &Matrix, b: &Matrix, tol: f64) -> Result<bool> {
    check_square_pair(a, b)?;
    Ok(min_eigenvalue(&(b - a))? >= -tol)
}

/// Smallest eigenvalue of B − A; nonnegative iff A ⊑ B.
pub fn loewner_gap(a: &Matrix, b: &Matrix) -> Result<f64> {
    check_square_pair(a, b)?;
    min_eigenvalue(&(b - a))
}

pub fn is_psd(a: &Matrix, tol: f64) -> Result<bool> {
    if !a.is_square() {
        return Err(Error::dim("PSD test needs a square matrix"));
    }
    Ok(a.is_hermitian(tol.max(1e-10)) && min_eigenvalue(a)? >= -tol)
}

/// Hermitian with spectrum inside [0, 1].
pub fn is_quantum_predicate(a: &Matrix, tol: f64) -> Result<bool> {
    if !a.is_square() || !a.is_hermitian(1e-10_f64.max(tol)) {
        return Ok(false);
    }
    let v = eigvalsh(a)?;
    Ok(v.first().is_none_or(|&x| x >= -tol) && v.last().is_none_or(|&x| x <= 1.0 + tol))
}

/// Partial density operator: PSD with trace at most one.
pub fn is_density(a: &Matrix, tol: f64) -> Result<bool> {
    Ok(is_psd(a, tol)? && a.trace().re <= 1.0 + tol && a.trace().im.abs() <= tol)
}

pub fn is_unitary(u: &Matrix, tol: f64) -> bool {
    u.is_square() && u.dagger().matmul(u).approx_eq(&Matrix::identity(u.rows()), tol)
}

pub fn is_projector(p: &Matrix, tol: f64) -> bool {
    p.is_square() && p.is_hermitian(tol) && p.matmul(p).approx_eq(p, tol)
}

/// Projector onto the span of eigenvectors whose eigenvalue exceeds
/// `rel_tol` times the largest eigenvalue.
pub fn support_projector(a: &Matrix, rel_tol: f64) -> Result<Matrix> {
    let e = eigh(a)?;
    let top = e.max().max(0.0);
    if e.min() < -1e-8 * top.max(1.0) {
        return Err(Error::Invalid(format!("support of a non-PSD operator (min eigenvalue {:.3e})", e.min())));
    }
    if top == 0.0 {
        return Ok(Matrix::zeros(a.rows(), a.rows()));
    }
    let cut = rel_tol * top;
    Ok(e.reconstruct(|l| if l > cut { 1.0 } else { 0.0 }))
}

/// Orthonormal basis (as columns) of the support of a PSD operator.
pub fn support_basis(a: &Matrix, rel_tol: f64) -> Result<Matrix> {
    let e = eigh(a)?;
    let top = e.max().max(0.0);
    let cut = rel_tol * top;
    let keep: Vec<usize> = (0..e.values.len()).filter(|&k| top > 0.0 && e.values[k] > cut).collect();
    let mut w = Matrix::zeros(a.rows(), keep.len());
    for (c, &k) in keep.iter().enumerate() {
        w.set_column(c, &e.vector(k));
    }
    Ok(w)
}

/// Positive square root of a PSD operator; negative roundoff is clipped.
pub fn sqrt_psd(a: &Matrix) -> Result<Matrix> {
    Ok(eigh(a)?.reconstruct(|l| l.max(0.0).sqrt()))
}

/// Nearest PSD operator in Frobenius norm.
pub fn psd_part(a: &Matrix) -> Result<Matrix> {
    Ok(eigh(a)?.reconstruct(|l| l.max(0.0)))
}

/// S = Σᵢⱼ |i⟩⟨j| ⊗ |j⟩⟨i| on C^d ⊗ C^d.
pub fn swap_operator(d: usize) -> Matrix {
    let n = d * d;
    let mut s = Matrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            s[(i * d + j, j * d + i)] = ONE;
        }
    }
    s
}

/// The symmetric-subspace projector ½(I⊗I + S).
pub fn sym_projector(d: usize) -> Matrix {
    (&Matrix::identity(d * d) + &swap_operator(d)).scale_re(0.5)
}

/// Projector onto Σᵢ |ii⟩ spans, the basis-equality predicate for the
/// columns of `basis` (identity means the computational basis).
pub fn basis_eq_projector(basis: &Matrix) -> Matrix {
    let d = basis.rows();
    let mut out = Matrix::zeros(d * d, d * d);
    for k in 0..basis.cols() {
        let v = basis.column(k);
        let vv: Vec<C64> = v.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        out = &out + &Matrix::projector(&vv);
    }
    out
}

/// Projector onto the maximally entangled vector Σᵢ|ii⟩/√d.
pub fn max_entangled_projector(d: usize) -> Matrix {
    let mut v = vec![ZERO; d * d];
    let s = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = C64::new(s, 0.0);
    }
    Matrix::projector(&v)
}

/// Row-major vectorization, so that vec(|b⟩⟨a|) = |b⟩|a⟩.
pub fn vec(m: &Matrix) -> Vec<C64> {
    m.data().to_vec()
}

pub fn unvec(v: &[C64], rows: usize, cols: usize) -> Result<Matrix> {
    Matrix::from_vec(rows, cols, v.to_vec())
}

fn check_kraus(kraus: &[Matrix]) -> Result<(usize, usize)> {
    let first = kraus.first().ok_or_else(|| Error::Invalid("empty Kraus list".into()))?;
    let dims = first.dims();
    if kraus.iter().any(|k| k.dims() != dims) {
        return Err(Error::dim("Kraus operators of different shapes"));
    }
    Ok(dims)
}

/// Â = Σ K ⊗ K̄, acting on row-major vectorizations.
pub fn superop_matrix(kraus: &[Matrix]) -> Result<Matrix> {
    let (r, c) = check_kraus(kraus)?;
    let mut out = Matrix::zeros(r * r, c * c);
    for k in kraus {
        out = &out + &k.kron(&k.conj());
    }
    Ok(out)
}

/// Σ K ρ K†.
pub fn apply_kraus(kraus: &[Matrix], rho: &Matrix) -> Result<Matrix> {
    let (r, c) = check_kraus(kraus)?;
    if rho.dims() != (c, c) {
        return Err(Error::dim(format!("state {:?} for Kraus input dim {c}", rho.dims())));
    }
    let mut out = Matrix::zeros(r, r);
    for k in kraus {
        out = &out + &k.sandwich(rho);
    }
    Ok(out)
}

/// Σ K† A K.
pub fn apply_kraus_dual(kraus: &[Matrix], a: &Matrix) -> Result<Matrix> {
    let (r, c) = check_kraus(kraus)?;
    if a.dims() != (r, r) {
        return Err(Error::dim(format!("predicate {:?} for Kraus output dim {r}", a.dims())));
    }
    let mut out = Matrix::zeros(c, c);
    for k in kraus {
        out = &out + &k.sandwich_dual(a);
    }
    Ok(out)
}

/// Applies a vectorized superoperator to an operator.
pub fn apply_superop(m: &Matrix, rho: &Matrix, out_dim: usize) -> Result<Matrix> {
    if !rho.is_square() || m.cols() != rho.rows() * rho.cols() || m.rows() != out_dim * out_dim {
        return Err(Error::dim("superoperator and state sizes disagree"));
    }
    let v = Matrix::column_vector(rho.data());
    unvec(m.matmul(&v).data(), out_dim, out_dim)
}

/// Σ E† E, which equals I exactly for trace-preserving Kraus sets.
pub fn kraus_completeness(kraus: &[Matrix]) -> Result<Matrix> {
    let (_, c) = check_kraus(kraus)?;
    let mut out = Matrix::zeros(c, c);
    for k in kraus {
        out = &out + &k.dagger().matmul(k);
    }
    Ok(out)
}

/// Choi matrix J = Σᵢⱼ E(|i⟩⟨j|) ⊗ |i⟩⟨j| from a vectorized superoperator.
pub fn choi_from_superop(m: &Matrix, d_in: usize, d_out: usize) -> Matrix {
    let mut j = Matrix::zeros(d_out * d_in, d_out * d_in);
    for i in 0..d_in {
        for k in 0..d_in {
            let col = i * d_in + k;
            for o in 0..d_out {
                for p in 0..d_out {
                    j[(o * d_in + i, p * d_in + k)] = m[(o * d_out + p, col)];
                }
            }
        }
    }
    j
}

/// Kraus operators read off a Choi matrix in the layout of
/// [`choi_from_superop`].
pub fn kraus_from_choi(j: &Matrix, d_in: usize, d_out: usize) -> Result<Vec<Matrix>> {
    let e = eigh(j)?;
    let top = e.max().max(0.0);
    let mut out = Vec::new();
    for (k, &lam) in e.values.iter().enumerate() {
        if lam <= 1e-12 * top.max(1.0) {
            continue;
        }
        let s = lam.sqrt();
        let mut op = Matrix::zeros(d_out, d_in);
        for o in 0..d_out {
            for i in 0..d_in {
                op[(o, i)] = e.vectors[(o * d_in + i, k)] * s;
            }
        }
        out.push(op);
    }
    if out.is_empty() {
        out.push(Matrix::zeros(d_out, d_in));
    }
    Ok(out)
}

/// Fidelity-style overlap ⟨ψ|ρ|ψ⟩.
pub fn overlap(psi: &[C64], rho: &Matrix) -> f64 {
    let n = psi.len();
    let mut s = ZERO;
    for i in 0..n {
        for j in 0..n {
            s += psi[i].conj() * rho[(i, j)] * psi[j];
        }
    }
    s.re
}

/// Total variation distance between two distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
