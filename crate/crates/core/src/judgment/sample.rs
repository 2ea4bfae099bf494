use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::random::{random_density, random_pure};
use crate::linalg::{eigh, Matrix, C64};

use super::conditions::{check_separability, SeparabilityStatus, SideCondition};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sampler {
    pub count: usize,
    pub seed: u64,
    /// Random inputs are pure; otherwise every other sample is mixed.
    pub pure_only: bool,
    /// Inputs are product states between the two programs.
    pub separable_inputs: bool,
    /// Adds basis states, the maximally entangled state and the maximally
    /// mixed state ahead of the random samples.
    pub battery: bool,
    #[serde(skip)]
    pub extra: Vec<Matrix>,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler { count: 200, seed: 0, pure_only: true, separable_inputs: false, battery: true, extra: vec![] }
    }
}

impl Sampler {
    pub fn new(count: usize, seed: u64) -> Sampler {
        Sampler { count, seed, ..Sampler::default() }
    }

    pub fn separable(mut self) -> Self {
        self.separable_inputs = true;
        self
    }

    pub fn with_extra(mut self, states: Vec<Matrix>) -> Self {
        self.extra = states;
        self
    }

    /// Independent generator for sample `k`.
    pub fn rng(&self, k: usize) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(k as u64 + 1);
        r
    }

    /// Deterministic structured inputs on d₁ ⊗ d₂.
    pub fn battery_states(&self, d1: usize, d2: usize) -> Vec<Matrix> {
        let mut out = self.extra.clone();
        if !self.battery {
            return out;
        }
        let n = d1 * d2;
        for i in 0..d1 {
            for j in 0..d2 {
                out.push(Matrix::unit(n, i * d2 + j, i * d2 + j));
            }
        }
        if !self.separable_inputs {
            let d = d1.min(d2);
            let mut v = vec![C64::new(0.0, 0.0); n];
            for i in 0..d {
                v[i * d2 + i] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
            }
            out.push(Matrix::projector(&v));
        }
        out.push(Matrix::identity(n).scale_re(1.0 / n as f64));
        out
    }

    /// Random input number `k`.
    pub fn random_state(&self, k: usize, d1: usize, d2: usize) -> Matrix {
        let mut rng = self.rng(k);
        let mixed = !self.pure_only && k % 2 == 1;
        if self.separable_inputs {
            let (a, b) = if mixed {
                (random_density(&mut rng, d1, d1), random_density(&mut rng, d2, d2))
            } else {
                (Matrix::projector(&random_pure(&mut rng, d1)), Matrix::projector(&random_pure(&mut rng, d2)))
            };
            return a.kron(&b);
        }
        let n = d1 * d2;
        if mixed {
            let rank = rng.random_range(1..=n);
            random_density(&mut rng, n, rank)
        } else {
            Matrix::projector(&random_pure(&mut rng, n))
        }
    }
}

/// Orthonormalized affine constraints ⟨Qₖ, X⟩ = cₖ on Hermitian X.
struct Affine {
    q: Vec<Matrix>,
    c: Vec<f64>,
}

impl Affine {
    fn new(hs: &[Matrix], n: usize) -> Affine {
        let mut rows: Vec<(Matrix, f64)> = vec![(Matrix::identity(n), 1.0)];
        rows.extend(hs.iter().map(|h| (h.hermitian_part(), 0.0)));
        let mut q: Vec<Matrix> = Vec::new();
        let mut c = Vec::new();
        for (mut g, mut b) in rows {
            for (qk, ck) in q.iter().zip(&c) {
                let t = qk.hs_inner(&g).re;
                g = &g - &qk.scale_re(t);
                b -= t * ck;
            }
            let norm = g.frobenius_norm();
            if norm > 1e-10 {
                q.push(g.scale_re(1.0 / norm));
                c.push(b / norm);
            }
        }
        Affine { q, c }
    }

    fn residual(&self, x: &Matrix) -> f64 {
        self.q.iter().zip(&self.c).map(|(q, c)| (q.hs_inner(x).re - c).abs()).fold(0.0, f64::max)
    }

    fn project(&self, x: &Matrix) -> Matrix {
        let mut y = x.hermitian_part();
        for (q, c) in self.q.iter().zip(&self.c) {
            let t = q.hs_inner(&y).re - c;
            y = &y - &q.scale_re(t);
        }
        y
    }
}

fn psd_clip(x: &Matrix) -> Matrix {
    eigh(x).map(|e| e.reconstruct(|v| v.max(0.0))).unwrap_or_else(|_| x.clone())
}

/// Alternating projections between the affine slice cut out by the
/// Hermitian constraints (plus unit trace) and the PSD cone. Returns a state
/// with residual at most 1e−9, or None.
pub fn project_to_slice(rho: &Matrix, constraints: &[Matrix]) -> Option<Matrix> {
    let n = rho.rows();
    let aff = Affine::new(constraints, n);
    let mut x = rho.clone();
    for _ in 0..5000 {
        let y = aff.project(&x);
        let z = psd_clip(&y);
        if aff.residual(&z) <= 1e-9 {
            return Some(z.hermitian_part());
        }
        x = z;
    }
    None
}

/// A sampled input satisfying every condition in Γ, with a flag telling
/// whether the sample is only approximately in the constrained set.
pub fn sample_input(sampler: &Sampler, k: usize, d1: usize, d2: usize, gamma: &[SideCondition]) -> Option<(Matrix, bool)> {
    let affine: Vec<Matrix> = gamma.iter().flat_map(|g| g.linear_constraints()).collect();
    let seps: Vec<&SideCondition> = gamma.iter().filter(|g| !g.is_measurement()).collect();
    let base = sampler.random_state(k, d1, d2);
    if seps.is_empty() {
        if affine.is_empty() {
            return Some((base, false));
        }
        return project_to_slice(&base, &affine).map(|s| (s, false));
    }
    // Rejection sampling over the PPT set, from mixtures with the
    // maximally mixed state.
    let mut rng = sampler.rng(k);
    let n = d1 * d2;
    let white = Matrix::identity(n).scale_re(1.0 / n as f64);
    for attempt in 0..64 {
        let cand = if attempt == 0 {
            base.clone()
        } else {
            let lam: f64 = rng.random_range(0.0..1.0);
            let pure = Matrix::projector(&random_pure(&mut rng, n));
            &pure.scale_re(lam) + &white.scale_re(1.0 - lam)
        };
        let cand = if affine.is_empty() {
            cand
        } else {
            match project_to_slice(&cand, &affine) {
                Some(s) => s,
                None => continue,
            }
        };
        let mut ok = true;
        let mut exact = true;
        for s in &seps {
            match check_separability(s, &cand) {
                Ok(SeparabilityStatus::Yes) => {}
                Ok(SeparabilityStatus::RelaxationPassed) => exact = false,
                _ => ok = false,
            }
        }
        if ok {
            return Some((cand, !exact || !affine.is_empty()));
        }
    }
    None
}
