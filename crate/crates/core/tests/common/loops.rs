//! Loop pairs for the agreement bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rqpd_core::judgment::{loop_bound, loop_exit_profile, sample_input, Sampler, SideCondition};
use rqpd_core::lang::{Gate, Measurement, Program, Register, Stmt};
use rqpd_core::linalg::random::random_unitary;
use rqpd_core::linalg::Matrix;

/// A random loop on one qubit and its conjugate by a random unitary W, so
/// that the pair has a nontrivial set of agreeing inputs.
pub fn random_loop_pair(rng: &mut ChaCha8Rng) -> [(Program, Measurement); 2] {
    let u = random_unitary(rng, 2);
    let v = random_unitary(rng, 2);
    let w = random_unitary(rng, 2);
    let make = |c: &Matrix, name: &str| {
        let m0 = c.matmul(&u).sandwich(&Matrix::unit(2, 0, 0));
        let m1 = c.matmul(&u).sandwich(&Matrix::unit(2, 1, 1));
        let meas = Measurement::binary(name, m0, m1);
        let gate = Gate { name: "V".into(), matrix: c.sandwich(&v) };
        let regs = vec![Register { name: "q".into(), dim: 2 }];
        (Program::new(regs, Stmt::Unitary { regs: vec!["q".into()], gate }).unwrap(), meas)
    };
    [make(&Matrix::identity(2), "R"), make(&w, "S")]
}

/// Samples `pairs` loop pairs with an input that agrees on the first
/// `loop_bound(2, 2)` exit probabilities, and returns the largest
/// disagreement up to `depth`.
pub fn agreement_extends(pairs: usize, depth: usize, seed: u64) -> Result<f64, String> {
    let q = vec!["q".to_string()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = loop_bound(2, 2);
    let (mut tested, mut attempt, mut worst) = (0, 0, 0.0f64);
    while tested < pairs {
        attempt += 1;
        if attempt > 10 * pairs as u64 {
            return Err("could not sample enough constrained pairs".into());
        }
        let [(b1, m1), (b2, m2)] = random_loop_pair(&mut rng);
        let cond = SideCondition::meas_loop_eq(&b1, &m1, &q, &b2, &m2, &q).map_err(|e| e.to_string())?;
        let sampler = Sampler { pure_only: false, ..Sampler::new(1, attempt) };
        let Some((rho, _)) = sample_input(&sampler, 0, 2, 2, std::slice::from_ref(&cond)) else { continue };
        let SideCondition::MeasLoopEq { left, right } = &cond else { unreachable!() };
        let series = loop_exit_profile(left, right, &rho, depth).map_err(|e| e.to_string())?;
        let early = series[..bound].iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if early > 1e-8 {
            return Err(format!("sampled input violates the condition: {early}"));
        }
        worst = worst.max(series.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        tested += 1;
    }
    Ok(worst)
}
