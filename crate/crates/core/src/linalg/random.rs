use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{Matrix, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    C64::new(a, b)
}

/// Haar-random unit vector.
pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// Random density operator of rank `rank` (Hilbert-Schmidt measure when
/// rank = d), normalized to trace one.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> Matrix {
    let g = random_ginibre(rng, d, rank.max(1));
    let m = g.matmul(&g.dagger());
    let t = m.trace().re;
    m.scale_re(1.0 / t)
}

pub fn random_ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| gaussian(rng)).collect();
    Matrix::from_vec(rows, cols, data).expect("sizes agree")
}

/// Haar-random unitary via Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Matrix {
    loop {
        let g = random_ginibre(rng, d, d);
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
        let mut ok = true;
        for j in 0..d {
            let mut v = g.column(j);
            for q in &cols {
                let p: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= p * y;
                }
            }
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if n < 1e-8 {
                ok = false;
                break;
            }
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
        if ok {
            let mut u = Matrix::zeros(d, d);
            for (j, q) in cols.iter().enumerate() {
                u.set_column(j, q);
            }
            return u;
        }
    }
}

/// Random Hermitian matrix with i.i.d. Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Matrix {
    random_ginibre(rng, d, d).hermitian_part()
}

/// Random quantum predicate: Hermitian with spectrum uniform in [0, 1].
pub fn random_predicate<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Matrix {
    let u = random_unitary(rng, d);
    let diag: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    u.sandwich(&Matrix::diag_real(&diag))
}
