//! Invariants checked on random inputs.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rqpd_core::coupling::{max_coupling_value, CouplingProblem};
use rqpd_core::judgment::Prepared;
use rqpd_core::lang::{parse, pretty, Program};
use rqpd_core::linalg::random::{random_density, random_ginibre, random_predicate, random_unitary};
use rqpd_core::linalg::{
    apply_kraus, apply_superop, is_projector, loewner_gap, min_eigenvalue, partial_trace, superop_matrix,
    support_projector, swap_operator, Matrix, Shape,
};
use rqpd_core::rules::{joint_dual, joint_forward, qpd_wp};
use rqpd_core::semantics::{denote, dual, run_to_depth};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const HEADER: &str = "var q : 2, r : 2;\nlet A = kraus { [[1,0],[0,0.6]], [[0,0.8],[0,0]] };\n";

fn leaf() -> impl Strategy<Value = String> {
    let reg = prop_oneof![Just("q"), Just("r")];
    prop_oneof![
        Just("skip".to_string()),
        reg.clone().prop_map(|x| format!("{x} := |0>")),
        (reg.clone(), prop_oneof![Just("H"), Just("X"), Just("Y"), Just("Z")]).prop_map(|(x, g)| format!("{x} := {g}[{x}]")),
        reg.prop_map(|x| format!("{x} := A[{x}]")),
        Just("q, r := CNOT[q, r]".to_string()),
        Just("r, q := CNOT[r, q]".to_string()),
    ]
}

fn leaves() -> impl Strategy<Value = String> {
    prop::collection::vec(leaf(), 1..4).prop_map(|v| v.join("; "))
}

/// Loop bodies are straight-line so that the branching tree stays linear.
fn stmt() -> impl Strategy<Value = String> {
    let reg = prop_oneof![Just("q"), Just("r")];
    let simple = prop_oneof![
        3 => leaves(),
        1 => (reg.clone(), leaves()).prop_map(|(x, b)| format!("while M[{x}] = 1 do {b} od")),
    ];
    prop_oneof![
        2 => simple.clone(),
        1 => (reg, simple.clone(), simple.clone()).prop_map(|(x, a, b)| format!("if M[{x}] = 0 -> {a} [] 1 -> {b} fi")),
        1 => prop::collection::vec(simple, 2..4).prop_map(|v| v.join("; ")),
    ]
}

fn program() -> impl Strategy<Value = Program> {
    prop::collection::vec(stmt(), 1..4).prop_map(|v| parse(&format!("{HEADER}{}", v.join("; "))).unwrap())
}

const TOKENS: &[&str] = &[
    "var", "q", "r", ":", "2", "3", ";", ",", "let", "U", "meas", "kraus", "{", "}", "[", "]", "[[", "]]", "(", ")", "skip",
    "if", "fi", "while", "do", "od", "trout", ":=", "=", "->", "[]", "|0>", "|", ">", "H", "X", "CNOT", "M", "M'", "ZERO",
    "sqrt", "*", "-", "0", "1", "0.5", "1e400", "i", "2i", "\n", "#", "0:", "1:",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn parser_never_panics(toks in prop::collection::vec(prop::sample::select(TOKENS), 0..40)) {
        let _ = parse(&toks.join(" "));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pretty_printing_preserves_meaning(p in program()) {
        let back = parse(&pretty(&p)).unwrap();
        let (a, b) = (denote(&p).unwrap(), denote(&back).unwrap());
        prop_assert!(a.choi().max_abs_diff(&b.choi()) <= 1e-12);
    }

    #[test]
    fn denotation_is_cp_and_trace_nonincreasing(p in program()) {
        let e = denote(&p).unwrap();
        prop_assert!(min_eigenvalue(&e.choi()).unwrap() >= -1e-9);
        let d = e.d_in();
        let j = partial_trace(&e.choi(), &Shape::new(vec![e.d_out(), d]).unwrap(), &[1]).unwrap();
        prop_assert!(loewner_gap(&j, &Matrix::identity(d)).unwrap() >= -1e-9);
    }

    #[test]
    fn truncations_increase_to_the_denotation(p in program(), seed in any::<u64>()) {
        let rho = random_density(&mut rng(seed), 4, 4);
        let full = denote(&p).unwrap().apply(&rho).unwrap();
        let mut prev = Matrix::zeros(4, 4);
        for depth in [4, 16, 64, 400] {
            let t = run_to_depth(&p, &rho, depth).unwrap();
            prop_assert!(loewner_gap(&prev, &t).unwrap() >= -1e-9);
            prop_assert!(loewner_gap(&t, &full).unwrap() >= -1e-9);
            prev = t;
        }
        prop_assert!(prev.max_abs_diff(&full) <= 1e-6, "gap {}", prev.max_abs_diff(&full));
    }

    #[test]
    fn dual_is_adjoint_and_keeps_predicates(p in program(), seed in any::<u64>()) {
        let mut g = rng(seed);
        let (rho, a) = (random_density(&mut g, 4, 4), random_predicate(&mut g, 4));
        let e = denote(&p).unwrap();
        let da = dual(&e).apply(&a).unwrap();
        prop_assert!((a.expect(&e.apply(&rho).unwrap()) - da.expect(&rho)).abs() <= 1e-10);
        prop_assert!(min_eigenvalue(&da).unwrap() >= -1e-9);
        prop_assert!(loewner_gap(&da, &Matrix::identity(4)).unwrap() >= -1e-9);
    }

    #[test]
    fn joint_transformers_are_adjoint(p1 in program(), p2 in program(), seed in any::<u64>()) {
        let mut g = rng(seed);
        let (rho, b) = (random_density(&mut g, 16, 16), random_predicate(&mut g, 16));
        let lhs = b.expect(&joint_forward(&p1, &p2, &rho).unwrap());
        let rhs = joint_dual(&p1, &p2, &b).unwrap().expect(&rho);
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn wlp_precondition_is_sound(seed in any::<u64>(), body in leaves()) {
        let p = parse(&format!("{HEADER}q := H[q]; {body}; r := H[r]")).unwrap();
        let mut g = rng(seed);
        let post = random_predicate(&mut g, 4);
        let rep = qpd_wp(&p, &post, &[]).unwrap();
        prop_assert!(rep.valid());
        let rho = random_density(&mut g, 4, 4);
        let out = denote(&p).unwrap().apply(&rho).unwrap();
        prop_assert!(rep.pre.expect(&rho) <= post.expect(&out) + rho.trace().re - out.trace().re + 1e-10);
    }

    #[test]
    fn partial_trace_keeps_trace_and_is_adjoint_to_tensoring(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4) {
        let mut g = rng(seed);
        let m = random_ginibre(&mut g, d1 * d2, d1 * d2);
        let a = random_ginibre(&mut g, d1, d1);
        let shape = Shape::new(vec![d1, d2]).unwrap();
        let t = partial_trace(&m, &shape, &[0]).unwrap();
        prop_assert!((t.trace() - m.trace()).norm() <= 1e-10);
        let lhs = t.matmul(&a).trace();
        let rhs = m.matmul(&a.kron(&Matrix::identity(d2))).trace();
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn swap_exchanges_factors(seed in any::<u64>(), d in 1usize..4) {
        let mut g = rng(seed);
        let (a, b) = (random_ginibre(&mut g, d, d), random_ginibre(&mut g, d, d));
        let s = swap_operator(d);
        prop_assert!(s.matmul(&a.kron(&b)).matmul(&s).max_abs_diff(&b.kron(&a)) <= 1e-12);
    }

    #[test]
    fn support_projector_fixes_the_state(seed in any::<u64>(), d in 1usize..6, rank in 1usize..6) {
        let rho = random_density(&mut rng(seed), d, rank.min(d));
        let p = support_projector(&rho, 1e-10).unwrap();
        prop_assert!(is_projector(&p, 1e-9));
        prop_assert!((p.trace().re - rank.min(d) as f64).abs() <= 1e-9);
        prop_assert!(p.matmul(&rho).max_abs_diff(&rho) <= 1e-9);
    }

    #[test]
    fn superoperator_matrix_agrees_with_kraus(seed in any::<u64>(), d in 1usize..4, k in 1usize..4) {
        let mut g = rng(seed);
        let u = random_unitary(&mut g, d * k);
        let kraus: Vec<Matrix> = (0..k)
            .map(|i| Matrix::from_vec(d, d, (0..d * d).map(|x| u[(i * d + x / d, x % d)]).collect()).unwrap())
            .collect();
        let rho = random_density(&mut g, d, d);
        let via = apply_superop(&superop_matrix(&kraus).unwrap(), &rho, d).unwrap();
        prop_assert!(via.max_abs_diff(&apply_kraus(&kraus, &rho).unwrap()) <= 1e-12);
        prop_assert!((via.trace().re - 1.0).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coupling_witness_has_the_marginals(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (a, b, obj) = (random_density(&mut g, 2, 2), random_density(&mut g, 2, 2), random_predicate(&mut g, 4));
        let full = max_coupling_value(&CouplingProblem::new(a.clone(), b.clone(), obj.clone())).unwrap();
        let ppt = max_coupling_value(&CouplingProblem::new(a.clone(), b.clone(), obj.clone()).with_ppt()).unwrap();
        prop_assert!(full.is_feasible() && ppt.is_feasible());
        let shape = Shape::new(vec![2, 2]).unwrap();
        prop_assert!(partial_trace(&full.witness, &shape, &[0]).unwrap().max_abs_diff(&a) <= 1e-6);
        prop_assert!(partial_trace(&full.witness, &shape, &[1]).unwrap().max_abs_diff(&b) <= 1e-6);
        prop_assert!(min_eigenvalue(&full.witness).unwrap() >= -1e-6);
        prop_assert!((obj.expect(&full.witness) - full.value).abs() <= 1e-6);
        prop_assert!(ppt.value <= full.value + 1e-6);
    }

    /// With diagonal data the optimum is a classical transport plan, which
    /// for two bits is linear along a segment and peaks at an end.
    #[test]
    fn diagonal_coupling_matches_transport(a in 0.0f64..1.0, b in 0.0f64..1.0, w in prop::array::uniform4(0.0f64..1.0)) {
        let obj = Matrix::diag_real(&w);
        let p = CouplingProblem::new(Matrix::diag_real(&[a, 1.0 - a]), Matrix::diag_real(&[b, 1.0 - b]), obj);
        let plan = |t: f64| w[0] * t + w[1] * (a - t) + w[2] * (b - t) + w[3] * (1.0 - a - b + t);
        let want = plan((a + b - 1.0).max(0.0)).max(plan(a.min(b)));
        let got = max_coupling_value(&p).unwrap().value;
        prop_assert!((got - want).abs() <= 1e-5, "got {got}, want {want}");
    }

    #[test]
    fn coupling_value_is_concave(seed in any::<u64>(), lam in 0.0f64..1.0) {
        let mut g = rng(seed);
        let obj = random_predicate(&mut g, 4);
        let (a1, b1, a2, b2) =
            (random_density(&mut g, 2, 2), random_density(&mut g, 2, 2), random_density(&mut g, 2, 2), random_density(&mut g, 2, 2));
        let mix = |x: &Matrix, y: &Matrix| &x.scale_re(lam) + &y.scale_re(1.0 - lam);
        let v = |a: Matrix, b: Matrix| max_coupling_value(&CouplingProblem::new(a, b, obj.clone())).unwrap().value;
        let mid = v(mix(&a1, &a2), mix(&b1, &b2));
        prop_assert!(mid >= lam * v(a1, b1) + (1.0 - lam) * v(a2, b2) - 1e-5);
    }

    #[test]
    fn judgment_margin_is_concave(seed in any::<u64>(), lam in 0.0f64..1.0) {
        let mut g = rng(seed);
        let p1 = parse("var q : 2; q := H[q]").unwrap();
        let p2 = parse("var q : 2; q := X[q]; q := H[q]").unwrap();
        let prep = Prepared::new(&p1, &p2).unwrap();
        let (pre, post) = (random_predicate(&mut g, 4), random_predicate(&mut g, 4));
        let (r1, r2) = (random_density(&mut g, 4, 4), random_density(&mut g, 4, 4));
        let mid = &r1.scale_re(lam) + &r2.scale_re(1.0 - lam);
        let m = |r: &Matrix| prep.margin(&pre, &post, r).unwrap().unwrap();
        prop_assert!(m(&mid) >= lam * m(&r1) + (1.0 - lam) * m(&r2) - 1e-5);
    }
}
