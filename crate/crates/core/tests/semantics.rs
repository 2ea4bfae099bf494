use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rqpd_core::lang::parse;
use rqpd_core::linalg::random::{random_density, random_hermitian};
use rqpd_core::linalg::{apply_kraus, c, is_psd, Matrix};
use rqpd_core::semantics::{denote, dual, is_lossless, run, run_to_depth, Configuration};

fn rho_mix() -> Matrix {
    Matrix::from_real(&[&[5.0, 1.0], &[1.0, 1.0]]).scale_re(1.0 / 6.0)
}

const Q2: &str = "if M'[q] = 0 -> q := Z[q] [] 1 -> q := H[q] fi";
const P1: &str = "q := |0>; q := H[q]; if M[q] = 0 -> q := X[q] [] 1 -> q := H[q] fi";
const P2: &str = "q := |0>; if M'[q] = 0 -> q := Z[q] [] 1 -> q := H[q] fi; q := H[q]";

#[test]
fn q2_on_mixed_state() {
    let out = run(&parse(Q2).unwrap(), &rho_mix()).unwrap();
    let want = Matrix::from_real(&[&[1.0, -1.0], &[-1.0, 2.0]]).scale_re(1.0 / 3.0);
    assert!(out.approx_eq(&want, 1e-10), "{out:?}");
}

#[test]
fn q2_first_step_splits_by_outcome() {
    let c0 = Configuration::initial(&parse(Q2).unwrap(), &rho_mix()).unwrap();
    let succ = c0.step();
    assert_eq!(succ.len(), 2);
    let s0 = Matrix::from_real(&[&[1.0, 1.0], &[1.0, 1.0]]).scale_re(1.0 / 3.0);
    let s1 = Matrix::from_real(&[&[1.0, -1.0], &[-1.0, 1.0]]).scale_re(1.0 / 6.0);
    assert!(succ[0].1.state.approx_eq(&s0, 1e-12));
    assert!(succ[1].1.state.approx_eq(&s1, 1e-12));
}

#[test]
fn p1_p2_same_output() {
    let want = Matrix::from_real(&[&[1.0, -1.0], &[-1.0, 3.0]]).scale_re(0.25);
    for src in [P1, P2] {
        let p = parse(src).unwrap();
        let e = denote(&p).unwrap();
        assert!(e.apply(&rho_mix()).unwrap().approx_eq(&want, 1e-10));
        assert!(is_lossless(&p).unwrap().lossless);
    }
}

#[test]
fn exit_unless_both_one_loop_is_lossless() {
    let src = "let N = meas { 0: [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,0]], 1: [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,1]] };
qx := |0>; qy := |0>; while N[qx,qy] = 1 do qx := H[qx]; qy := H[qy] od";
    let p = parse(src).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rho = random_density(&mut rng, 4, 4);
    let out = run(&p, &rho).unwrap();
    let rep = is_lossless(&p).unwrap();
    assert!(rep.lossless, "{rep:?}");
    let depth = run_to_depth(&p, &rho, 200).unwrap();
    assert!(depth.approx_eq(&out, 1e-7));
}

#[test]
fn divergent_loop_is_not_lossless() {
    let src = "let T = meas { 0: [[0,0],[0,0]], 1: [[1,0],[0,1]] }; while T[q] = 1 do skip od";
    let rep = is_lossless(&parse(src).unwrap()).unwrap();
    assert!(!rep.lossless);
    assert!(!rep.loops[0].lossless, "{rep:?}");
}

#[test]
fn dual_adjointness() {
    let p = parse("let B = kraus { sqrt(0.75) * [[1,0],[0,1]], sqrt(0.25) * [[0,1],[1,0]] }; q := B[q]").unwrap();
    let e = denote(&p).unwrap();
    let d = dual(&e);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_hermitian(&mut rng, 2);
    let rho = random_density(&mut rng, 2, 2);
    let lhs = a.trace_product(&e.apply(&rho).unwrap());
    let rhs = d.apply(&a).unwrap().trace_product(&rho);
    assert!((lhs - rhs).norm() < 1e-12);
    let ks = e.kraus_ops().unwrap();
    assert!(apply_kraus(&ks, &rho).unwrap().approx_eq(&e.apply(&rho).unwrap(), 1e-10));
    assert!(is_psd(&e.choi(), 1e-9).unwrap());
    let _ = c(0.0, 0.0);
}
