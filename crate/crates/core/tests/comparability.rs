mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rqpd_core::comparability::*;
use rqpd_core::judgment::{loop_bound, marginals, project_to_slice};
use rqpd_core::lang::{parse, Program};
use rqpd_core::linalg::gates::{ket_minus, ket_plus};
use rqpd_core::linalg::random::{random_density, random_pure};
use rqpd_core::linalg::Matrix;
use rqpd_core::semantics::outcome_profile;

#[test]
fn loop_series_agreement_extends() {
    assert_eq!(loop_bound(2, 2), 8);
    let late = common::loops::agreement_extends(20, 21, 56).unwrap();
    assert!(late <= 1e-8, "agreement for n ≤ 7 did not extend: {late}");
}

#[test]
fn empty_programs_give_seed() {
    let p = parse("var q : 2; skip").unwrap();
    let c = collect_constraints(&p, &p).unwrap();
    assert_eq!(c.len(), 1);
    let rho = Matrix::identity(2).scale_re(0.5);
    assert!(check_comparability(&c, &rho, &rho).unwrap());
    assert!(!check_comparability(&c, &rho, &rho.scale_re(0.5)).unwrap());
}

#[test]
fn identical_ifs_accept_equal_inputs() {
    let p = parse("if M[q] = 0 -> q := H[q] [] 1 -> skip fi").unwrap();
    let c = collect_constraints(&p, &p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let r = random_density(&mut rng, 2, 2);
        assert!(check_comparability(&c, &r, &r).unwrap());
    }
}

#[test]
fn misaligned_programs_are_rejected() {
    let a = parse("if M[q] = 0 -> skip [] 1 -> skip fi").unwrap();
    let b = parse("while M[q] = 1 do q := H[q] od").unwrap();
    assert!(collect_constraints(&a, &b).is_err());
    let c = parse("q := H[q]").unwrap();
    assert!(collect_constraints(&c, &c).is_err());
    let d = parse("if M[q] = 0 -> skip [] 1 -> skip fi; if M[q] = 0 -> skip [] 1 -> skip fi").unwrap();
    assert!(collect_constraints(&a, &d).is_err());
}

#[test]
fn working_example_cases() {
    let q1 = parse("if M[q] = 0 -> q := X[q] [] 1 -> q := H[q] fi").unwrap();
    let q2 = parse("if M'[q] = 0 -> q := Z[q] [] 1 -> q := H[q] fi").unwrap();
    let c = collect_constraints(&q1, &q2).unwrap();
    let rho = &Matrix::unit(2, 0, 0).kron(&Matrix::projector(&ket_plus())).scale_re(0.5)
        + &Matrix::unit(2, 1, 1).kron(&Matrix::projector(&ket_minus())).scale_re(0.5);
    let (r1, r2) = marginals(&rho, 2, 2).unwrap();
    assert!(check_comparability(&c, &r1, &r2).unwrap());
    let p1 = outcome_profile(&q1, &r1, 4).unwrap();
    let p2 = outcome_profile(&q2, &r2, 4).unwrap();
    assert_eq!(p1.keys().collect::<Vec<_>>(), p2.keys().collect::<Vec<_>>());
    for (k, v) in &p1 {
        assert!((v - p2[k]).abs() < 1e-12);
    }
    // |0⟩ on both sides: M gives 0 surely, M' is uniform.
    let z = Matrix::unit(2, 0, 0);
    assert!(!check_comparability(&c, &z, &z).unwrap());
}

fn profiles_agree(p1: &Program, r1: &Matrix, p2: &Program, r2: &Matrix, depth: usize) -> f64 {
    let a = outcome_profile(p1, r1, depth).unwrap();
    let b = outcome_profile(p2, r2, depth).unwrap();
    a.keys()
        .chain(b.keys())
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn constraints_are_sufficient_to_depth_eight() {
    let p1 = parse(
        "while M[q] = 1 do q := H[q] od; if M[q] = 0 -> q := X[q] [] 1 -> skip fi; \
         while M[q] = 1 do q := Y[q] od",
    )
    .unwrap();
    // The conjugate of p1 by H.
    let p2 = parse(
        "while M'[q] = 1 do q := H[q] od; if M'[q] = 0 -> q := Z[q] [] 1 -> skip fi; \
         while M'[q] = 1 do q := Y[q] od",
    )
    .unwrap();
    let c = collect_constraints(&p1, &p2).unwrap();
    assert!(c.len() <= 8, "dedup keeps at most d1²+d2² pairs, got {}", c.len());
    let hs: Vec<Matrix> = c
        .pairs
        .iter()
        .map(|(a, b)| &a.kron(&Matrix::identity(2)) - &Matrix::identity(2).kron(b))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut tested = 0;
    for _ in 0..200 {
        if tested == 50 {
            break;
        }
        let start = Matrix::projector(&random_pure(&mut rng, 4));
        let start = &start.scale_re(0.5) + &Matrix::identity(4).scale_re(0.125);
        let Some(rho) = project_to_slice(&start, &hs) else { continue };
        let (r1, r2) = marginals(&rho, 2, 2).unwrap();
        if !check_comparability(&c, &r1, &r2).unwrap() {
            continue;
        }
        let dev = profiles_agree(&p1, &r1, &p2, &r2, 8);
        assert!(dev <= 1e-7, "branching trees differ by {dev}");
        tested += 1;
    }
    assert_eq!(tested, 50);
}

#[test]
fn smaller_loop_bound_suffices_empirically() {
    // Truncating the collected loop powers at d₁²+d₂²−1 leaves the span unchanged.
    let p1 = parse("while M[q] = 1 do q := H[q] od").unwrap();
    let p2 = parse("while M'[q] = 1 do q := Y[q] od").unwrap();
    let c = collect_constraints(&p1, &p2).unwrap();
    assert!(c.len() <= loop_bound(2, 2));
    assert_eq!(loop_powers(2, 2), 10);
}
