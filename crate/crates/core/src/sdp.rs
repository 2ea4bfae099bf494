//! Small dense semidefinite programs over Hermitian block-diagonal
//! variables, solved by an infeasible-start primal-dual interior-point
//! method (HKM direction, Mehrotra predictor-corrector).
//!
//! Primal: maximize ⟨C, X⟩ subject to ⟨Aᵢ, X⟩ = bᵢ and X ⪰ 0.
//! Dual:   minimize bᵀy subject to Σ yᵢAᵢ − C ⪰ 0.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::eigvalsh;
use crate::linalg::solve::{cholesky_real, cholesky_solve_real, solve_real};
use crate::linalg::{Matrix, C64};

#[derive(Clone, Debug)]
pub struct Constraint {
    /// One entry per block; `None` means the zero matrix.
    pub mats: Vec<Option<Matrix>>,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct Sdp {
    pub blocks: Vec<usize>,
    pub objective: Vec<Option<Matrix>>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    /// Stopped early with residuals small enough to trust the value to
    /// about 1e−6.
    Feasible,
    Infeasible,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<Matrix>,
    pub y: Vec<f64>,
    pub z: Vec<Matrix>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { tol: 1e-9, max_iter: 200 }
    }
}

/// Re tr(A·B) for Hermitian A, B.
fn inner(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.rows();
    let (ad, bd) = (a.data(), b.data());
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = ad[i * n + k];
            let y = bd[k * n + i];
            s += x.re * y.re - x.im * y.im;
        }
    }
    s
}

fn herm(m: &Matrix) -> Matrix {
    m.hermitian_part()
}

fn to_na(m: &Matrix) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

fn from_na(m: &DMatrix<C64>) -> Matrix {
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(i, j)] = m[(i, j)];
        }
    }
    out
}

/// Inverse of a Hermitian positive definite matrix.
fn hpd_inverse(m: &Matrix) -> Option<Matrix> {
    let ch = to_na(m).cholesky()?;
    Some(herm(&from_na(&ch.inverse())))
}

/// Largest α ≤ cap with X + αΔX ⪰ 0, scaled back by `frac`.
fn max_step(x: &Matrix, dx: &Matrix, frac: f64) -> f64 {
    let Some(ch) = to_na(x).cholesky() else { return 0.0 };
    let l = ch.l();
    let Some(w) = l.solve_lower_triangular(&to_na(dx)) else { return 0.0 };
    let Some(v) = l.solve_lower_triangular(&w.adjoint()) else { return 0.0 };
    let lam = match eigvalsh(&herm(&from_na(&v))) {
        Ok(e) => e.first().copied().unwrap_or(0.0),
        Err(_) => return 0.0,
    };
    if lam >= 0.0 {
        1.0
    } else {
        (frac * (-1.0 / lam)).min(1.0)
    }
}

struct Reduced {
    keep: Vec<usize>,
}

/// Drops linearly dependent constraints, verifying that their right-hand
/// sides are consistent with the kept ones.
fn reduce(sdp: &Sdp) -> Result<Reduced> {
    let m = sdp.constraints.len();
    let mut g = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let mut s = 0.0;
            for (a, b) in sdp.constraints[i].mats.iter().zip(&sdp.constraints[j].mats) {
                if let (Some(a), Some(b)) = (a, b) {
                    s += inner(a, b);
                }
            }
            g[i * m + j] = s;
            g[j * m + i] = s;
        }
    }
    let scale = (0..m).map(|i| g[i * m + i]).fold(0.0, f64::max).max(1e-300);
    // Pivoted Cholesky of the Gram matrix.
    let mut r = g.clone();
    let mut keep = Vec::new();
    let mut used = vec![false; m];
    loop {
        let mut best = None;
        let mut bv = 1e-10 * scale;
        for i in 0..m {
            if !used[i] && r[i * m + i] > bv {
                bv = r[i * m + i];
                best = Some(i);
            }
        }
        let Some(p) = best else { break };
        used[p] = true;
        keep.push(p);
        let d = r[p * m + p].sqrt();
        let col: Vec<f64> = (0..m).map(|i| r[i * m + p] / d).collect();
        for i in 0..m {
            for j in 0..m {
                r[i * m + j] -= col[i] * col[j];
            }
        }
    }
    keep.sort_unstable();
    let k = keep.len();
    if k < m {
        let gk: Vec<f64> = keep.iter().flat_map(|&i| keep.iter().map(move |&j| (i, j))).map(|(i, j)| g[i * m + j]).collect();
        let bk: Vec<f64> = keep.iter().map(|&i| sdp.constraints[i].rhs).collect();
        let bscale = 1.0 + sdp.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
        for i in (0..m).filter(|i| !keep.contains(i)) {
            let rhs: Vec<f64> = keep.iter().map(|&j| g[j * m + i]).collect();
            let coef = solve_real(&gk, k, &rhs).ok_or_else(|| Error::Numerical("singular constraint Gram matrix".into()))?;
            let implied: f64 = coef.iter().zip(&bk).map(|(c, b)| c * b).sum();
            if (implied - sdp.constraints[i].rhs).abs() > 1e-7 * bscale {
                return Err(Error::Infeasible(format!(
                    "constraint {i} contradicts the others ({implied:.3e} vs {:.3e})",
                    sdp.constraints[i].rhs
                )));
            }
        }
    }
    Ok(Reduced { keep })
}

pub fn solve(sdp: &Sdp, opts: &SdpOptions) -> Result<SdpSolution> {
    let nb = sdp.blocks.len();
    if sdp.objective.len() != nb || sdp.constraints.iter().any(|c| c.mats.len() != nb) {
        return Err(Error::dim("SDP block counts disagree"));
    }
    for (b, &d) in sdp.blocks.iter().enumerate() {
        let ok = |m: &Option<Matrix>| m.as_ref().is_none_or(|m| m.dims() == (d, d));
        if !ok(&sdp.objective[b]) || sdp.constraints.iter().any(|c| !ok(&c.mats[b])) {
            return Err(Error::dim(format!("SDP block {b} has size {d}")));
        }
    }
    let red = reduce(sdp)?;
    let cons: Vec<&Constraint> = red.keep.iter().map(|&i| &sdp.constraints[i]).collect();
    let m = cons.len();
    let b: Vec<f64> = cons.iter().map(|c| c.rhs).collect();
    let c: Vec<Matrix> =
        sdp.blocks.iter().enumerate().map(|(k, &d)| sdp.objective[k].clone().unwrap_or_else(|| Matrix::zeros(d, d))).collect();
    let ntot: usize = sdp.blocks.iter().sum();
    let bnorm = 1.0 + b.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let cnorm = 1.0 + c.iter().map(|x| x.max_abs()).fold(0.0, f64::max);

    let a_of = |x: &[Matrix]| -> Vec<f64> {
        cons.iter()
            .map(|con| con.mats.iter().zip(x).map(|(a, x)| a.as_ref().map_or(0.0, |a| inner(a, x))).sum())
            .collect()
    };
    let at_of = |y: &[f64]| -> Vec<Matrix> {
        sdp.blocks
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                let mut s = Matrix::zeros(d, d);
                for (con, &yi) in cons.iter().zip(y) {
                    if let Some(a) = &con.mats[k] {
                        if yi != 0.0 {
                            s = &s + &a.scale_re(yi);
                        }
                    }
                }
                s
            })
            .collect()
    };

    let start = 10.0_f64.max((ntot as f64).sqrt()) * bnorm.max(cnorm).sqrt();
    let mut x: Vec<Matrix> = sdp.blocks.iter().map(|&d| Matrix::identity(d).scale_re(start)).collect();
    let mut z: Vec<Matrix> = sdp.blocks.iter().map(|&d| Matrix::identity(d).scale_re(start)).collect();
    let mut y = vec![0.0; m];

    let mut status = SdpStatus::NumericalFailure;
    let mut iters = 0;
    let (mut pres, mut dres) = (f64::INFINITY, f64::INFINITY);
    let mut best: Option<(f64, Vec<Matrix>, Vec<f64>, Vec<Matrix>, f64, f64)> = None;

    for it in 0..opts.max_iter {
        iters = it + 1;
        let ax = a_of(&x);
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let aty = at_of(&y);
        let rd: Vec<Matrix> = (0..nb).map(|k| &(&aty[k] - &z[k]) - &c[k]).collect();
        pres = rp.iter().map(|v| v.abs()).fold(0.0, f64::max) / bnorm;
        dres = rd.iter().map(|v| v.max_abs()).fold(0.0, f64::max) / cnorm;
        let pobj: f64 = (0..nb).map(|k| inner(&c[k], &x[k])).sum();
        let dobj: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let xz: f64 = (0..nb).map(|k| inner(&x[k], &z[k])).sum();
        let mu = xz / ntot as f64;

        let merit = pres.max(dres).max(gap);
        if best.as_ref().is_none_or(|bst| merit < bst.0) {
            best = Some((merit, x.clone(), y.clone(), z.clone(), pres, dres));
        }
        if pres < opts.tol && dres < opts.tol && gap < opts.tol {
            status = SdpStatus::Optimal;
            break;
        }

        let zinv: Vec<Matrix> = match z.iter().map(hpd_inverse).collect::<Option<Vec<_>>>() {
            Some(v) => v,
            None => break,
        };
        // Schur complement M_ij = Re tr(A_i X A_j Z⁻¹).
        let gmats: Vec<Vec<Option<Matrix>>> = cons
            .iter()
            .map(|con| {
                con.mats
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a.as_ref().map(|a| x[k].matmul(a).matmul(&zinv[k])))
                    .collect()
            })
            .collect();
        let mut mm = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let mut s = 0.0;
                for k in 0..nb {
                    if let (Some(a), Some(g)) = (&cons[i].mats[k], &gmats[j][k]) {
                        s += inner(a, g);
                    }
                }
                mm[i * m + j] = s;
                mm[j * m + i] = s;
            }
        }
        let chol = cholesky_real(&mm, m);
        let solve_m = |h: &[f64]| -> Option<Vec<f64>> {
            match &chol {
                Some(l) => Some(cholesky_solve_real(l, m, h)),
                None => solve_real(&mm, m, h),
            }
        };
        let xrdz: Vec<Matrix> = (0..nb).map(|k| x[k].matmul(&rd[k]).matmul(&zinv[k])).collect();

        let direction = |sigma_mu: f64, corr: Option<&Vec<Matrix>>| -> Option<(Vec<Matrix>, Vec<f64>, Vec<Matrix>)> {
            let target: Vec<Matrix> = (0..nb)
                .map(|k| {
                    let mut t = &zinv[k].scale_re(sigma_mu) - &x[k];
                    if let Some(cr) = corr {
                        t = &t - &cr[k];
                    }
                    t
                })
                .collect();
            let h: Vec<f64> = (0..m)
                .map(|i| {
                    let mut s = -rp[i];
                    for k in 0..nb {
                        if let Some(a) = &cons[i].mats[k] {
                            s += inner(a, &target[k]) - inner(a, &xrdz[k]);
                        }
                    }
                    s
                })
                .collect();
            let dy = solve_m(&h)?;
            if dy.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let atdy = at_of(&dy);
            let dz: Vec<Matrix> = (0..nb).map(|k| &atdy[k] + &rd[k]).collect();
            let dx: Vec<Matrix> =
                (0..nb).map(|k| herm(&(&target[k] - &x[k].matmul(&dz[k]).matmul(&zinv[k])))).collect();
            Some((dx, dy, dz))
        };

        let Some((dxa, dya, dza)) = direction(0.0, None) else { break };
        let ap = (0..nb).map(|k| max_step(&x[k], &dxa[k], 1.0)).fold(1.0, f64::min);
        let ad = (0..nb).map(|k| max_step(&z[k], &dza[k], 1.0)).fold(1.0, f64::min);
        let mu_aff: f64 = (0..nb)
            .map(|k| inner(&(&x[k] + &dxa[k].scale_re(ap)), &(&z[k] + &dza[k].scale_re(ad))))
            .sum::<f64>()
            / ntot as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr: Vec<Matrix> = (0..nb).map(|k| dxa[k].matmul(&dza[k]).matmul(&zinv[k])).collect();
        let (dx, dy, dz) = match direction(sigma * mu, Some(&corr)) {
            Some(d) => d,
            None => (dxa, dya, dza),
        };
        let frac = 0.98;
        let ap = (0..nb).map(|k| max_step(&x[k], &dx[k], frac)).fold(1.0, f64::min);
        let ad = (0..nb).map(|k| max_step(&z[k], &dz[k], frac)).fold(1.0, f64::min);
        if ap < 1e-14 && ad < 1e-14 {
            break;
        }
        for k in 0..nb {
            x[k] = herm(&(&x[k] + &dx[k].scale_re(ap)));
            z[k] = herm(&(&z[k] + &dz[k].scale_re(ad)));
        }
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += ad * d;
        }
    }

    if status != SdpStatus::Optimal {
        if let Some((merit, bx, by, bz, bp, bd)) = best {
            x = bx;
            y = by;
            z = bz;
            pres = bp;
            dres = bd;
            if merit < 1e-6 {
                status = SdpStatus::Feasible;
            }
        }
    }
    let pobj: f64 = (0..nb).map(|k| inner(&c[k], &x[k])).sum();
    let dobj: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();
    // Report multipliers against the full constraint list.
    let mut yfull = vec![0.0; sdp.constraints.len()];
    for (slot, &i) in red.keep.iter().enumerate() {
        yfull[i] = y[slot];
    }
    Ok(SdpSolution {
        status,
        x,
        y: yfull,
        z,
        primal_value: pobj,
        dual_value: dobj,
        primal_residual: pres,
        dual_residual: dres,
        iterations: iters,
    })
}

/// An orthonormal basis of the real space of d×d Hermitian matrices.
pub fn hermitian_basis(d: usize) -> Vec<Matrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        out.push(Matrix::unit(d, a, a));
        for b in (a + 1)..d {
            let mut re = Matrix::zeros(d, d);
            re[(a, b)] = C64::new(s, 0.0);
            re[(b, a)] = C64::new(s, 0.0);
            out.push(re);
            let mut im = Matrix::zeros(d, d);
            im[(a, b)] = C64::new(0.0, -s);
            im[(b, a)] = C64::new(0.0, s);
            out.push(im);
        }
    }
    out
}
