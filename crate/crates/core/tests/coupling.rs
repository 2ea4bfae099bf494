use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rqpd_core::coupling::*;
use rqpd_core::linalg::random::random_density;
use rqpd_core::linalg::{sym_projector, Matrix};

fn gap_objective() -> Matrix {
    Matrix::from_real(&[
        &[2.0, 0.0, 0.0, 1.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[1.0, 0.0, 0.0, 2.0],
    ])
    .scale_re(1.0 / 3.0)
}

#[test]
fn entangled_coupling_beats_ppt() {
    let half = Matrix::identity(2).scale_re(0.5);
    let p = CouplingProblem::new(half.clone(), half.clone(), gap_objective());
    let full = max_coupling_value(&p).unwrap();
    assert!(full.is_feasible());
    assert!((full.value - 1.0).abs() < 1e-5, "{}", full.value);
    let ppt = max_coupling_value(&p.with_ppt()).unwrap();
    assert!((ppt.value - 2.0 / 3.0).abs() < 1e-4, "{}", ppt.value);
    assert!(full.marginal_residual < 1e-6);
}

#[test]
fn sym_lifting_iff_equal() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..20 {
        let d = 2 + k % 2;
        let a = random_density(&mut rng, d, 1 + k % d);
        let b = random_density(&mut rng, d, d);
        let sym = sym_projector(d);
        assert!(lifting_exists(&a, &a, &sym).unwrap().is_feasible());
        let s = lifting_exists(&a, &b, &sym).unwrap();
        assert!(!s.is_feasible(), "{k} {}", s.value);
    }
}

#[test]
fn trace_mismatch_is_infeasible() {
    let a = Matrix::identity(2).scale_re(0.5);
    let b = Matrix::identity(2).scale_re(0.4);
    let s = max_coupling_value(&CouplingProblem::new(a, b, Matrix::identity(4))).unwrap();
    assert_eq!(s.status, CouplingStatus::Infeasible);
}

#[test]
fn closed_form_couplings_have_marginals() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = random_density(&mut rng, 3, 3);
    let s = make_coupling(&CouplingKind::BasisIdentity { rho: rho.clone() }).unwrap();
    let sh = rqpd_core::linalg::Shape::new(vec![3, 3]).unwrap();
    assert!(rqpd_core::linalg::partial_trace(&s, &sh, &[0]).unwrap().approx_eq(&rho, 1e-9));
    assert!(rqpd_core::linalg::partial_trace(&s, &sh, &[1]).unwrap().approx_eq(&rho, 1e-9));
}
