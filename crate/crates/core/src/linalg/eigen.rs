//! Hermitian eigensolver: Householder tridiagonalization and implicit QL
//! iterations applied to the real symmetric embedding [[Re, -Im], [Im, Re]].

use super::matrix::{Matrix, C64, ZERO};
use crate::error::{Error, Result};

/// Eigen-decomposition of a Hermitian matrix. `values` ascend; column `k` of
/// `vectors` is the unit eigenvector for `values[k]`.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Rebuilds Σ f(λₖ)|vₖ⟩⟨vₖ|.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.vectors.rows();
        let mut out = Matrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                if vi == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Eigenvalues and eigenvectors of a Hermitian matrix. The input is
/// symmetrized first, so small Hermiticity defects are tolerated.
pub fn eigh(a: &Matrix) -> Result<Eigh> {
    if !a.is_square() {
        return Err(Error::dim("eigh needs a square matrix"));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Eigh { values: vec![], vectors: Matrix::zeros(0, 0) });
    }
    if a.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    let h = a.hermitian_part();
    let real = h.data().iter().all(|z| z.im == 0.0);
    if real {
        let mut v = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                v[i][j] = h[(i, j)].re;
            }
        }
        let (d, v) = symmetric_eigen(v)?;
        let mut vectors = Matrix::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                vectors[(i, k)] = C64::new(v[i][k], 0.0);
            }
        }
        return Ok(Eigh { values: d, vectors });
    }

    let m = 2 * n;
    let mut s = vec![vec![0.0; m]; m];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            s[i][j] = z.re;
            s[i + n][j + n] = z.re;
            s[i][j + n] = -z.im;
            s[i + n][j] = z.im;
        }
    }
    let (d, v) = symmetric_eigen(s)?;

    // Each complex eigenvector appears twice in the embedding (as z and iz).
    // Pick n mutually orthogonal images by pivoted Gram-Schmidt.
    let mut cands: Vec<Vec<C64>> = (0..m)
        .map(|k| (0..n).map(|i| C64::new(v[i][k], v[i + n][k])).collect())
        .collect();
    let mut taken = vec![false; m];
    let mut chosen: Vec<(f64, Vec<C64>)> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best = usize::MAX;
        let mut best_norm = -1.0;
        for (k, cv) in cands.iter().enumerate() {
            if taken[k] {
                continue;
            }
            let nrm = norm(cv);
            if nrm > best_norm + 1e-12 {
                best_norm = nrm;
                best = k;
            }
        }
        if best == usize::MAX || best_norm < 1e-6 {
            return Err(Error::Numerical("eigenvector extraction lost rank".into()));
        }
        taken[best] = true;
        let mut q = cands[best].clone();
        let nq = norm(&q);
        q.iter_mut().for_each(|z| *z /= nq);
        for (k, cv) in cands.iter_mut().enumerate() {
            if taken[k] {
                continue;
            }
            let p = dot(&q, cv);
            for (x, y) in cv.iter_mut().zip(&q) {
                *x -= p * y;
            }
        }
        // Re-orthogonalize against previously chosen vectors for stability.
        for (_, prev) in &chosen {
            let p = dot(prev, &q);
            for (x, y) in q.iter_mut().zip(prev) {
                *x -= p * y;
            }
        }
        let nq = norm(&q);
        q.iter_mut().for_each(|z| *z /= nq);
        chosen.push((d[best], q));
    }
    chosen.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut vectors = Matrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, (lam, q)) in chosen.into_iter().enumerate() {
        values.push(lam);
        vectors.set_column(k, &q);
    }
    Ok(Eigh { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &Matrix) -> Result<Vec<f64>> {
    Ok(eigh(a)?.values)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real symmetric eigenproblem. Returns ascending eigenvalues and the
/// matrix whose columns are the eigenvectors.
pub fn symmetric_eigen(a: Vec<Vec<f64>>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.len();
    let mut v = a;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 1 {
        d[0] = v[0][0];
        v[0][0] = 1.0;
        return Ok((d, v));
    }
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;
    Ok((d, v))
}

fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..(n - 1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

fn tql2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 200 {
                    return Err(Error::Numerical("QL iteration did not converge".into()));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    for i in 0..(n - 1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for row in v.iter_mut() {
                row.swap(i, k);
            }
        }
    }
    Ok(())
}
