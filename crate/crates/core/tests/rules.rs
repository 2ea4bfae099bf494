use rqpd_core::judgment::Sampler;
use rqpd_core::lang::{parse, Scope};
use rqpd_core::linalg::gates::{hadamard, ket_plus, pauli_x, pauli_z};
use rqpd_core::linalg::{basis_eq_projector, is_projector, swap_operator, sym_projector, Matrix};
use rqpd_core::rules::*;

const WORKING: &str = include_str!("../src/casebook/fixtures/working-example/outline.json");

fn half_sym(u: &Matrix) -> Matrix {
    let i = Matrix::identity(4);
    (&i + &u.sandwich(&swap_operator(2))).scale_re(0.5)
}

fn b_pred() -> Matrix {
    half_sym(&Matrix::identity(2).kron(&hadamard()))
}

fn a00() -> Matrix {
    half_sym(&pauli_x().kron(&pauli_z().matmul(&hadamard())))
}

fn a11() -> Matrix {
    half_sym(&hadamard().kron(&hadamard().matmul(&hadamard())))
}

fn inst(rule: Rule, l: &str, r: &str) -> RuleInstance {
    let s = Scope::of("var q : 2; skip").unwrap();
    RuleInstance {
        rule,
        left: s.fragment(l).unwrap(),
        right: s.fragment(r).unwrap(),
        payload: Payload::default(),
    }
}

#[test]
fn rule_names_round_trip() {
    for r in Rule::ALL {
        assert_eq!(r.name().parse::<Rule>().unwrap(), *r);
    }
    assert!("IF9".parse::<Rule>().is_err());
}

#[test]
fn ut_gives_a00() {
    let pre = precondition_of(&inst(Rule::Ut, "q := X[q]", "q := Z[q]"), &b_pred()).unwrap();
    assert!(pre.approx_eq(&a00(), 1e-12));
    let pre = precondition_of(&inst(Rule::Ut, "q := H[q]", "q := H[q]"), &b_pred()).unwrap();
    assert!(pre.approx_eq(&a11(), 1e-12));
    // UT-R skip ∼ H on =_sym gives B.
    let pre = precondition_of(&inst(Rule::UtR, "skip", "q := H[q]"), &sym_projector(2)).unwrap();
    assert!(pre.approx_eq(&b_pred(), 1e-12));
}

#[test]
fn init_on_identity() {
    let id = Matrix::identity(4);
    let pre = precondition_of(&inst(Rule::Init, "q := |0>", "q := |0>"), &id).unwrap();
    assert!(pre.approx_eq(&id, 1e-12));
    let plus = Matrix::projector(&ket_plus());
    let p = parse("q := |0>").unwrap();
    let r = qpd_wp(&p, &plus, &[]).unwrap();
    assert!(r.pre.approx_eq(&Matrix::identity(2).scale_re(0.5), 1e-12));
}

#[test]
fn wrong_fragment_shape_is_rejected() {
    let e = precondition_of(&inst(Rule::Ut, "q := |0>", "q := H[q]"), &Matrix::identity(4));
    assert!(matches!(e, Err(rqpd_core::Error::Rule { .. })));
    let e = precondition_of(&inst(Rule::UtL, "q := H[q]", "q := H[q]"), &Matrix::identity(4));
    assert!(e.is_err());
}

#[test]
fn full_if_gives_seven_eighths() {
    let s = Scope::of("var q : 2; skip").unwrap();
    let l = s.fragment("if M[q] = 0 -> q := X[q] [] 1 -> q := H[q] fi").unwrap();
    let r = s.fragment("if M'[q] = 0 -> q := Z[q] [] 1 -> q := H[q] fi").unwrap();
    let a01 = half_sym(&pauli_x().kron(&hadamard().matmul(&hadamard())));
    let a10 = half_sym(&hadamard().kron(&pauli_z().matmul(&hadamard())));
    let payload = Payload { branch_pres: vec![a00(), a01, a10, a11()], ..Payload::default() };
    let a = precondition_of(&RuleInstance { rule: Rule::If, left: l, right: r, payload }, &b_pred()).unwrap();
    for i in 0..4 {
        assert!((a.data()[i * 4 + i].re - 0.875).abs() < 1e-12, "{a:?}");
    }
    for x in a.data() {
        let v = x.re.abs();
        assert!(x.im.abs() < 1e-12);
        assert!(v < 1e-12 || (v - 0.125).abs() < 1e-12 || (v - 0.875).abs() < 1e-12);
    }
    // =_B is not below the best the full case rule can reach.
    let seven = Matrix::identity(4).scale_re(0.875);
    assert!(rqpd_core::linalg::loewner_gap(&basis_eq_projector(&Matrix::identity(2)), &seven).unwrap() < -0.1);
}

#[test]
fn working_example_outline_checks() {
    let o = Outline::from_json(WORKING).unwrap();
    let rep = o.check(&CheckOptions::default()).unwrap();
    assert!(rep.valid, "{}", rep.derivation);
    assert!(rep.errors.is_empty());
    let names: Vec<Rule> = rep.derivation.steps.iter().map(|s| s.rule).collect();
    assert!(names.contains(&Rule::If1) && names.contains(&Rule::ScPlus));
    let entailments = rep
        .derivation
        .steps
        .iter()
        .flat_map(|s| &s.obligations)
        .filter(|o| o.kind == ObligationKind::CoupleEntailment)
        .count();
    assert_eq!(entailments, 2);
}

#[test]
fn seven_eighths_consequence_fails() {
    let mut o = Outline::from_json(WORKING).unwrap();
    o.predicates.insert("I".into(), PredRef::Scale { scale: 0.875, of: Box::new(PredRef::Name("identity".into())) });
    let rep = o.check(&CheckOptions::default()).unwrap();
    assert!(!rep.valid);
    let failed: Vec<&Obligation> =
        rep.derivation.steps.iter().flat_map(|s| &s.obligations).filter(|o| !o.passed).collect();
    assert!(failed.iter().any(|o| o.kind == ObligationKind::Loewner), "{}", rep.derivation);
}

#[test]
fn tampered_intermediate_fails() {
    let mut o = Outline::from_json(WORKING).unwrap();
    if let Some(items) = o.derivation.seq.as_mut() {
        items[2].premises[0].right = Some("q := X[q]".into());
    }
    let rep = o.check(&CheckOptions::default()).unwrap();
    assert!(!rep.valid);
}

fn conseq_over(d: Derivation, pre: Matrix) -> Derivation {
    Derivation::new(Rule::Conseq, d.left.clone(), d.right.clone(), pre, d.post.clone()).with_premises(vec![d])
}

#[test]
fn loop_rule_with_invariant() {
    // while M[q] = 1 do q := H[q] od on both sides, with A = I and B = 0,
    // so that the invariant is |00⟩⟨00|.
    let s = Scope::of("var q : 2; skip").unwrap();
    let lp = s.fragment("while M[q] = 1 do q := H[q] od").unwrap();
    let body = s.fragment("q := H[q]").unwrap();
    let inv = Matrix::unit(4, 0, 0);
    let ut = Derivation::backward(Rule::Ut, body.clone(), body, inv.clone(), vec![]).unwrap();
    let prem = conseq_over(ut, Matrix::zeros(4, 4));
    let d = Derivation::backward(Rule::Lp, lp.clone(), lp, Matrix::identity(4), vec![prem]).unwrap();
    assert!(d.pre.approx_eq(&inv, 1e-12));
    let rep = check_derivation(&d, &CheckOptions::default());
    assert!(rep.valid, "{rep}");
    assert!(rep.steps[0].obligations.iter().all(|o| o.kind == ObligationKind::Lossless));
}

#[test]
fn lossless_policy() {
    // The loop never exits from |1⟩, so it is not lossless.
    let s = Scope::of("var q : 2; skip").unwrap();
    let lp = s.fragment("while M[q] = 1 do skip od").unwrap();
    let body = s.fragment("skip").unwrap();
    let inv = Matrix::unit(4, 0, 0);
    let sk = Derivation::backward(Rule::Skip, body.clone(), body, inv, vec![]).unwrap();
    let prem = conseq_over(sk, Matrix::zeros(4, 4));
    let d = Derivation::backward(Rule::Lp, lp.clone(), lp, Matrix::identity(4), vec![prem]).unwrap();
    assert!(!check_derivation(&d, &CheckOptions::default()).valid);
    let opts = CheckOptions { policy: Policy::AssumeLossless, ..CheckOptions::default() };
    let rep = check_derivation(&d, &opts);
    assert!(rep.valid, "{rep}");
    assert!(rep.steps[0].obligations.iter().all(|o| o.discharge == Discharge::UncheckedAssumption));
}

#[test]
fn forward_projective_init() {
    let s = Scope::of("var q : 2; skip").unwrap();
    let i = s.fragment("q := |0>").unwrap();
    let pre = basis_eq_projector(&Matrix::identity(2));
    let d = Derivation::forward(Rule::InitP, i.clone(), i, pre).unwrap();
    assert!(d.post.approx_eq(&Matrix::unit(4, 0, 0), 1e-10));
    assert!(is_projector(&d.post, 1e-10));
    let opts = CheckOptions { projective: true, ..CheckOptions::default() };
    assert!(check_derivation(&d, &opts).valid);
    // Not a rule of the general system.
    assert!(!check_derivation(&d, &CheckOptions::default()).valid);
}

#[test]
fn case_and_weaken() {
    let s = Scope::of("var q : 2; skip").unwrap();
    let h = s.fragment("q := H[q]").unwrap();
    let a = Derivation::backward(Rule::Ut, h.clone(), h.clone(), sym_projector(2), vec![]).unwrap();
    let b = Derivation::backward(Rule::Ut, h.clone(), h.clone(), sym_projector(2), vec![]).unwrap();
    let pre = (&a.pre.scale_re(0.25) + &b.pre.scale_re(0.75)).hermitian_part();
    let d = Derivation::new(Rule::Case, h.clone(), h, pre, sym_projector(2))
        .with_premises(vec![a, b])
        .with_payload(Payload { probs: vec![0.25, 0.75], ..Payload::default() });
    assert!(check_derivation(&d, &CheckOptions::default()).valid);
}

#[test]
fn frame_rule() {
    let small = Scope::of("var q : 2; skip").unwrap();
    let big = Scope::of("var q : 2, r : 2; skip").unwrap();
    let h = small.fragment("q := H[q]").unwrap();
    let hb = big.fragment("q := H[q]").unwrap();
    let prem = Derivation::backward(Rule::Ut, h.clone(), h, sym_projector(2), vec![]).unwrap();
    let c = basis_eq_projector(&Matrix::identity(2));
    let frame = FrameSpec { left: vec!["r".into()], right: vec!["r".into()], c: c.clone() };
    let pre = frame_split(&prem.pre, &c, 2, 2, 2, 2).unwrap();
    let post = frame_split(&prem.post, &c, 2, 2, 2, 2).unwrap();
    let sep = rqpd_core::judgment::SideCondition::separability(
        &hb,
        &hb,
        &[vec!["r<1>".into(), "r<2>".into()], vec!["q<1>".into(), "q<2>".into()]],
    )
    .unwrap();
    let d = Derivation::new(Rule::Frame, hb.clone(), hb.clone(), pre.clone(), post.clone())
        .with_premises(vec![prem.clone()])
        .with_payload(Payload { frame: Some(frame.clone()), ..Payload::default() });
    // Without the separability condition the step is rejected.
    assert!(!check_derivation(&d, &CheckOptions::default()).valid);
    let d = d.with_gamma(vec![sep]);
    let rep = check_derivation(&d, &CheckOptions::default());
    assert!(rep.valid, "{rep}");
}

#[test]
fn qpd_loop_invariant() {
    // {I} while M[q] = 1 do q := H[q] od {|0⟩⟨0|} with invariant B = I.
    let p = parse("while M[q] = 1 do q := H[q] od").unwrap();
    let post = Matrix::unit(2, 0, 0);
    let r = qpd_wp(&p, &post, &[Matrix::identity(2)]).unwrap();
    assert!(r.valid());
    assert!(r.pre.approx_eq(&Matrix::identity(2), 1e-12));
    // With postcondition 0, B = I is not preserved.
    let r = qpd_wp(&p, &Matrix::zeros(2, 2), &[Matrix::identity(2)]).unwrap();
    assert!(!r.valid());
    assert!(qpd_wp(&p, &post, &[]).is_err());
}

#[test]
fn sampler_is_used_for_measurement_obligations() {
    let o = Outline::from_json(WORKING).unwrap();
    let opts = CheckOptions { sampler: Sampler::new(5, 9), ..CheckOptions::default() };
    let rep = o.check(&opts).unwrap();
    let used: Vec<usize> = rep.derivation.steps.iter().flat_map(|s| &s.obligations).filter_map(|o| o.samples).collect();
    assert!(!used.is_empty() && used.iter().all(|&n| n > 0));
}
