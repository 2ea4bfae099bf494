//! One line per acceptance criterion.

mod common;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rqpd_core::casebook::programs::{self, Noise};
use rqpd_core::casebook::{run_scenario, Options};
use rqpd_core::coupling::{lifting_exists, max_coupling_value, CouplingProblem};
use rqpd_core::judgment::{check_judgment, Judgment, Sampler, Status};
use rqpd_core::lang::{builtins, parse, Program};
use rqpd_core::linalg::gates::{hadamard, pauli_z};
use rqpd_core::linalg::random::{random_density, random_pure, random_unitary};
use rqpd_core::linalg::{basis_eq_projector, overlap, sym_projector, Matrix, C64};
use rqpd_core::rules::{CheckOptions, ObligationKind, Outline, PredRef};
use rqpd_core::semantics::{denote, run};

const OUTLINE: &str = include_str!("../src/casebook/fixtures/working-example/outline.json");

struct Line {
    pass: bool,
    detail: String,
    /// Set when the criterion cannot be met as stated; the text says why
    /// and the criterion's own checks confirm that reason.
    gap: Option<String>,
}

fn line(pass: bool, detail: impl Into<String>) -> Line {
    Line { pass, detail: detail.into(), gap: None }
}

fn rho_mix() -> Matrix {
    Matrix::from_real(&[&[5.0, 1.0], &[1.0, 1.0]]).scale_re(1.0 / 6.0)
}

fn prog(src: &str) -> Program {
    parse(src).unwrap()
}

fn semantics_exact() -> Line {
    let start = Instant::now();
    let rho = rho_mix();
    let quarter = Matrix::from_real(&[&[1.0, -1.0], &[-1.0, 3.0]]).scale_re(0.25);
    let third = Matrix::from_real(&[&[1.0, -1.0], &[-1.0, 2.0]]).scale_re(1.0 / 3.0);
    let err = [
        run(&prog(programs::P1), &rho).unwrap().max_abs_diff(&quarter),
        run(&prog(programs::P2), &rho).unwrap().max_abs_diff(&quarter),
        run(&prog(programs::Q2), &rho).unwrap().max_abs_diff(&third),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    line(err <= 1e-10 && secs < 1.0, format!("max error {err:.1e}, {secs:.3} s"))
}

fn measurement_arithmetic() -> Line {
    let rho = rho_mix();
    let m = builtins::measurement("M'", &[2]).unwrap();
    let ops = m.operators();
    let want = [
        (2.0 / 3.0, Matrix::from_real(&[&[1.0, 1.0], &[1.0, 1.0]]).scale_re(1.0 / 3.0)),
        (1.0 / 3.0, Matrix::from_real(&[&[1.0, -1.0], &[-1.0, 1.0]]).scale_re(1.0 / 6.0)),
    ];
    let mut err: f64 = 0.0;
    for (op, (p, s)) in ops.iter().zip(&want) {
        let out = op.sandwich(&rho);
        err = err.max((out.trace().re - p).abs()).max(out.max_abs_diff(s));
    }
    line(err <= 1e-12, format!("max error {err:.1e}"))
}

fn coupling_gap() -> Line {
    let half = Matrix::identity(2).scale_re(0.5);
    let a = Matrix::from_real(&[&[2.0, 0.0, 0.0, 1.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[1.0, 0.0, 0.0, 2.0]])
        .scale_re(1.0 / 3.0);
    let p = CouplingProblem::new(half.clone(), half, a);
    let full = max_coupling_value(&p).unwrap().value;
    let ppt = max_coupling_value(&p.with_ppt()).unwrap().value;
    line((full - 1.0).abs() <= 1e-5 && (ppt - 2.0 / 3.0).abs() <= 1e-4, format!("value {full:.6}, PPT {ppt:.6}"))
}

fn sym_lifting() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut equal_ok, mut unequal_ok) = (0, 0);
    for k in 0..50 {
        let d = 2 + k % 2;
        let a = random_density(&mut rng, d, 1 + k % d);
        let b = random_density(&mut rng, d, d);
        let sym = sym_projector(d);
        equal_ok += lifting_exists(&a, &a, &sym).unwrap().is_feasible() as usize;
        unequal_ok += !lifting_exists(&a, &b, &sym).unwrap().is_feasible() as usize;
    }
    line(equal_ok == 50 && unequal_ok == 50, format!("{equal_ok}/50 equal pairs feasible, {unequal_ok}/50 unequal infeasible"))
}

fn working_example() -> Line {
    let outline = Outline::from_json(OUTLINE).unwrap();
    let opts = CheckOptions::default();
    let strict = outline.check(&opts).unwrap().valid;
    let eq_b = basis_eq_projector(&Matrix::identity(2));
    let j = Judgment::new(prog(programs::P1), prog(programs::P2), eq_b, sym_projector(2));
    let v = check_judgment(&j, &Sampler::new(200, 5)).unwrap();
    let mut weak = outline;
    weak.predicates.insert("I".into(), PredRef::Scale { scale: 0.875, of: Box::new(PredRef::Name("identity".into())) });
    let rep = weak.check(&opts).unwrap();
    let loewner = rep.derivation.steps.iter().flat_map(|s| &s.obligations).any(|o| o.kind == ObligationKind::Loewner && !o.passed);
    let pass = strict && v.status == Status::Passed && v.worst_margin >= -1e-6 && !rep.valid && loewner;
    line(
        pass,
        format!(
            "outline {}, judgment {:?} over {} samples (worst margin {:.1e}), 7/8 variant {}",
            if strict { "valid" } else { "invalid" },
            v.status,
            v.samples_used,
            v.worst_margin,
            if loewner { "fails its Löwner obligation" } else { "does not fail" }
        ),
    )
}

fn qbf_error(u: &Matrix, want: &Matrix, inputs: &[Matrix]) -> f64 {
    let e = denote(&prog(&programs::qbf_source(u, true))).unwrap();
    inputs.iter().map(|r| e.apply(r).unwrap().max_abs_diff(want)).fold(0.0, f64::max)
}

fn qbf() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let inputs: Vec<Matrix> = (0..20).map(|_| random_density(&mut rng, 4, 4)).collect();
    let u = loop {
        let u = random_unitary(&mut rng, 2);
        if (0.05..0.95).contains(&u[(0, 0)].norm()) {
            break u;
        }
    };
    let half = Matrix::identity(2).scale_re(0.5);
    let random_err = qbf_error(&u, &half, &inputs);
    let e = denote(&prog(&programs::qbf_source(&u, false))).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bell = [0.0, s, s, 0.0].map(|x| C64::new(x, 0.0));
    let fid = inputs.iter().map(|r| overlap(&bell, &e.apply(r).unwrap())).fold(1.0, f64::min);
    let h_err = qbf_error(&hadamard(), &half, &inputs);
    let quarter_err = qbf_error(&hadamard(), &Matrix::identity(2).scale_re(0.25), &inputs);
    let detail = format!("random U: error {random_err:.1e}, Bell fidelity {fid:.9}; U = H: error {h_err:.3}");
    let attainable = random_err <= 1e-6 && fid >= 1.0 - 1e-6;
    if h_err <= 1e-6 {
        return line(attainable, detail);
    }
    // H is real, so H⊗H fixes (|00⟩+|11⟩)/√2: half the weight never leaves
    // the loop and the output is I/4.
    let explained = quarter_err <= 1e-9;
    Line {
        pass: false,
        detail,
        gap: (attainable && explained)
            .then(|| "at U = H the loop keeps (|00⟩+|11⟩)/√2 forever; the output is I/4".to_string()),
    }
}

fn teleportation() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let e = denote(&prog(&programs::qtel_source(None))).unwrap();
    let mut id_err: f64 = 0.0;
    for _ in 0..20 {
        let rho = random_density(&mut rng, 2, 2);
        let junk = random_density(&mut rng, 4, 4);
        id_err = id_err.max(e.apply(&rho.kron(&junk)).unwrap().max_abs_diff(&rho));
    }
    let z = pauli_z();
    let zero2 = Matrix::unit(4, 0, 0);
    let mut slack = f64::INFINITY;
    for noise in [Noise::BitFlip, Noise::PhaseFlip, Noise::BitPhaseFlip] {
        for p in [0.5, 0.9] {
            let e = denote(&prog(&programs::qtel_source(Some((noise, p))))).unwrap();
            let pe = noise.effective(p);
            for _ in 0..20 {
                let psi = random_pure(&mut rng, 2);
                let rho = Matrix::projector(&psi);
                let out = e.apply(&rho.kron(&zero2)).unwrap();
                let zz = z.expect(&rho);
                slack = slack.min(overlap(&psi, &out) - (pe + (1.0 - pe) * zz * zz));
            }
        }
    }
    line(id_err <= 1e-9 && slack >= -1e-7, format!("identity error {id_err:.1e}, worst fidelity slack {slack:.1e}"))
}

fn channel_error(p: &Program, want: impl Fn(&Matrix) -> Matrix) -> f64 {
    let e = denote(p).unwrap();
    let d = e.d_in();
    let mut err: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let x = Matrix::unit(d, i, j);
            err = err.max(e.apply(&x).unwrap().max_abs_diff(&want(&x)));
        }
    }
    err
}

fn qotp() -> Line {
    let mut worst: f64 = 0.0;
    for n in [1, 2] {
        let d = 1 << n;
        let mixed = Matrix::identity(d).scale_re(1.0 / d as f64);
        worst = worst.max(channel_error(&prog(&programs::qotp_correct_source(n)), |x| x.clone()));
        worst = worst.max(channel_error(&prog(&programs::qotp_secure_source(n)), |x| mixed.scale(x.trace())));
    }
    line(worst <= 1e-8, format!("max error {worst:.1e} over n = 1, 2"))
}

fn scenario_checks(id: &str, names: &[&str]) -> Line {
    let rep = run_scenario(id, &Options::default()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for name in names {
        let c = rep.checks.iter().find(|c| c.name == *name).unwrap();
        pass &= c.status == Status::Passed;
        parts.push(format!("{name} {:?} ({:.1e})", c.status, c.residual));
    }
    line(pass, parts.join(", "))
}

fn loop_agreement() -> Line {
    match common::loops::agreement_extends(20, 21, 10) {
        Ok(late) => line(late <= 1e-8, format!("20 loop pairs, worst disagreement up to n = 20: {late:.1e}")),
        Err(e) => line(false, e),
    }
}

fn soundness() -> Line {
    let n = common::soundness::harness();
    line(
        true,
        format!(
            "{} rules × {} instances × {} samples ({n} judgments)",
            common::soundness::RULES.len(),
            common::soundness::INSTANCES,
            common::soundness::SAMPLES
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Line)> = vec![
        ("semantics exactness", semantics_exact),
        ("measurement arithmetic", measurement_arithmetic),
        ("coupling gap", coupling_gap),
        ("=sym lifting iff equal", sym_lifting),
        ("working example", working_example),
        ("Bernoulli factory", qbf),
        ("teleportation", teleportation),
        ("one-time pad", qotp),
        ("quantum walk", || scenario_checks("qwalk-equiv", &["position-distribution", "projective-judgment"])),
        ("loop agreement bound", loop_agreement),
        ("soundness harness", soundness),
        ("projective separation", || {
            scenario_checks("projective-separation", &["projective-check", "general-check", "counterexample"])
        }),
    ];
    let lines: Vec<Line> = criteria.par_iter().map(|(_, f)| f()).collect();
    let mut bad = Vec::new();
    for (k, ((name, _), l)) in criteria.iter().zip(&lines).enumerate() {
        let word = match (&l.pass, &l.gap) {
            (true, _) => "PASS",
            (false, Some(_)) => "FAIL (unattainable)",
            (false, None) => "FAIL",
        };
        println!("criterion {:>2} {word}: {name}: {}", k + 1, l.detail);
        if let Some(g) = &l.gap {
            println!("             {g}");
        }
        if !l.pass && l.gap.is_none() {
            bad.push(k + 1);
        }
    }
    assert!(bad.is_empty(), "criteria failed: {bad:?}");
}
