use rqpd_core::judgment::*;
use rqpd_core::lang::{builtins, parse};
use rqpd_core::linalg::gates::{ket_minus, ket_plus};
use rqpd_core::linalg::{basis_eq_projector, max_entangled_projector, sym_projector, Matrix};

const P1: &str = "q := |0>; q := H[q]; if M[q] = 0 -> q := X[q] [] 1 -> q := H[q] fi";
const P2: &str = "q := |0>; if M'[q] = 0 -> q := Z[q] [] 1 -> q := H[q] fi; q := H[q]";

fn eq_b() -> Matrix {
    basis_eq_projector(&Matrix::identity(2))
}

#[test]
fn working_example_judgment_passes() {
    let j = Judgment::new(parse(P1).unwrap(), parse(P2).unwrap(), eq_b(), sym_projector(2));
    let v = check_judgment(&j, &Sampler::new(100, 1)).unwrap();
    assert_eq!(v.status, Status::Passed, "{v:?}");
    assert!(v.worst_margin >= -1e-6);
}

#[test]
fn working_example_with_basis_post_is_falsified() {
    let j = Judgment::new(parse(P1).unwrap(), parse(P2).unwrap(), eq_b(), eq_b());
    let v = check_judgment(&j, &Sampler::new(100, 1)).unwrap();
    assert_eq!(v.status, Status::Falsified);
}

#[test]
fn skip_judgment_passes() {
    let a = Matrix::from_real(&[
        &[0.5, 0.1, 0.0, 0.0],
        &[0.1, 0.4, 0.0, 0.0],
        &[0.0, 0.0, 0.9, 0.0],
        &[0.0, 0.0, 0.0, 0.2],
    ]);
    let skip = parse("var q : 2; skip").unwrap();
    let j = Judgment::new(skip.clone(), skip, a.clone(), a);
    assert!(check_judgment(&j, &Sampler::new(30, 2)).unwrap().passed());
}

#[test]
fn projective_but_not_general() {
    let p1 = parse("q := X[q]").unwrap();
    let p2 = parse("q := H[q]; q := H[q]").unwrap();
    let psi = max_entangled_projector(2);
    let v = check_projective_judgment(&p1, &p2, &psi, &psi, &Sampler::new(50, 3)).unwrap();
    assert!(v.passed(), "{v:?}");
    let j = Judgment::new(p1, p2, psi.clone(), psi);
    let v = check_judgment(&j, &Sampler::new(0, 3)).unwrap();
    assert_eq!(v.status, Status::Falsified);
    let ce = v.counterexample.unwrap();
    assert!(ce.approx_eq(&Matrix::unit(4, 0, 0), 1e-12));
}

#[test]
fn measurement_judgment_of_working_example() {
    let q = parse("q := H[q]; q := H[q]").unwrap();
    let m = builtins::measurement("M", &[2]).unwrap();
    let mp = builtins::measurement("M'", &[2]).unwrap();
    let regs = vec!["q".to_string()];
    let ms = MeasSpec::on_inputs(&q, &m, &regs).unwrap();
    let mps = MeasSpec::on_inputs(&q, &mp, &regs).unwrap();
    // ρ = ½|0⟩⟨0|⊗|+⟩⟨+| + ½|1⟩⟨1|⊗|−⟩⟨−|
    let rho = &Matrix::unit(2, 0, 0).kron(&Matrix::projector(&ket_plus())).scale_re(0.5)
        + &Matrix::unit(2, 1, 1).kron(&Matrix::projector(&ket_minus())).scale_re(0.5);
    assert!(meas_eq_defect(&ms, &mps, &rho).unwrap() < 1e-12);
    let bad = Matrix::unit(2, 0, 0).kron(&Matrix::projector(&ket_minus()));
    assert!((meas_eq_defect(&ms, &mps, &bad).unwrap() - 1.0).abs() < 1e-12);
    let id = Matrix::identity(4);
    let rep = check_meas_judgment(&ms, &mps, &id, &[id.clone(), id.clone()], &rho).unwrap();
    assert!(rep.holds);
    let zero = Matrix::zeros(4, 4);
    assert!(!check_meas_judgment(&ms, &mps, &id, &[zero.clone(), zero], &rho).unwrap().holds);
    assert!(matches!(
        check_meas_judgment(&ms, &mps, &id, &[id.clone(), id.clone()], &bad),
        Err(rqpd_core::Error::Precondition(_))
    ));
}

#[test]
fn separability_tristate() {
    let p = parse("skip; q := H[q]").unwrap();
    let cond = SideCondition::separable_sides(&p, &p).unwrap();
    let phi = max_entangled_projector(2);
    assert_eq!(check_separability(&cond, &phi).unwrap(), SeparabilityStatus::No);
    let prod = Matrix::projector(&ket_plus()).kron(&Matrix::unit(2, 1, 1));
    assert_eq!(check_separability(&cond, &prod).unwrap(), SeparabilityStatus::Yes);
}

#[test]
fn entailment_examples() {
    let init = parse("q := |0>").unwrap();
    let h = parse("q := H[q]").unwrap();
    let skip = parse("q := H[q]; q := H[q]").unwrap();
    let m = builtins::measurement("M", &[2]).unwrap();
    let mp = builtins::measurement("M'", &[2]).unwrap();
    let regs = vec!["q".to_string()];
    let mpmp = SideCondition::meas_eq(&h, &mp, &regs, &h, &mp, &regs).unwrap();
    let v = check_couple_entailment(&[], std::slice::from_ref(&mpmp), &init, &init, &Sampler::new(40, 4)).unwrap();
    assert!(v.passed(), "{v:?}");
    let mmp = SideCondition::meas_eq(&h, &m, &regs, &h, &mp, &regs).unwrap();
    let v = check_couple_entailment(&[mpmp.clone()], &[mmp.clone()], &h, &skip, &Sampler::new(40, 4)).unwrap();
    assert!(v.passed(), "{v:?}");
    let v = check_couple_entailment(&[], &[mmp], &h, &skip, &Sampler::new(40, 4)).unwrap();
    assert_eq!(v.status, Status::Falsified);
}
