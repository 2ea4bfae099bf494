use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::programs::*;
use super::{CheckKind, Ctx, Material, Options, Scenario};
use crate::comparability::{check_comparability, collect_constraints};
use crate::error::{Error, Result};
use crate::judgment::{
    check_judgment, check_prepared, check_projective_judgment, marginals, project_to_slice, Judgment, Prepared,
    Sampler, SideCondition, Status, Verdict,
};
use crate::lang::{builtins, Program};
use crate::linalg::gates::{hadamard, ket0, ket1, ket_minus, ket_plus, pauli_z};
use crate::linalg::random::{random_density, random_pure, random_unitary};
use crate::linalg::{
    apply_kraus, basis_eq_projector, embed, max_entangled_projector, overlap, sym_projector, total_variation, Matrix, Shape, C64,
};
use crate::rules::{CheckOptions, ObligationKind, Outline, PredRef};
use crate::semantics::{denote, is_lossless, outcome_profile, run};

const OUTLINE: &str = include_str!("fixtures/working-example/outline.json");

macro_rules! scenario {
    ($id:literal, $title:literal, $dir:literal, $material:expr, $run:expr) => {
        Scenario {
            id: $id,
            title: $title,
            fixture: include_str!(concat!("fixtures/", $dir, "/fixture.json")),
            material: $material,
            run: $run,
        }
    };
}

pub(super) static CATALOG: &[Scenario] = &[
    scenario!("working-example", "Symmetry between two simple programs", "working-example", working_material, working),
    scenario!("uniformity-prop", "Uniformity by coupling, d = 2 and 3", "uniformity-prop", uniformity_material, uniformity),
    scenario!("qbf-uniformity", "Uniform output of the quantum Bernoulli factory", "qbf-uniformity", qbf_material, qbf),
    scenario!("teleport-correct", "Correctness of teleportation", "teleport-correct", teleport_material, teleport_correct),
    scenario!("teleport-noise-bitflip", "Teleportation under bit flip noise", "teleport-noise-bitflip", bitflip_material, bitflip),
    scenario!("teleport-noise-phaseflip", "Teleportation under phase flip noise", "teleport-noise-phaseflip", phaseflip_material, phaseflip),
    scenario!(
        "teleport-noise-bitphaseflip",
        "Teleportation under bit-phase flip noise",
        "teleport-noise-bitphaseflip",
        bitphaseflip_material,
        bitphaseflip
    ),
    scenario!("qotp-correct", "One-time pad decrypts correctly", "qotp-correct", qotp_material, qotp_correct),
    scenario!("qotp-secure", "One-time pad ciphertext is maximally mixed", "qotp-secure", qotp_material, qotp_secure),
    scenario!("qotp-n", "One-time pad on two qubits", "qotp-n", qotp_n_material, qotp_n),
    scenario!("qwalk-equiv", "Walks with Hadamard and balanced coins end at the same position", "qwalk-equiv", walk_material, walk),
    scenario!("comparability-demo", "Inputs that give equal branching trees", "comparability-demo", comparability_material, comparability),
    scenario!("projective-separation", "Projective validity does not imply validity", "projective-separation", separation_material, separation),
];

fn owned(v: &[(&str, String)]) -> Vec<(String, String)> {
    v.iter().map(|(a, b)| (a.to_string(), b.clone())).collect()
}

fn named(v: Vec<(&str, Matrix)>) -> Vec<(String, Matrix)> {
    v.into_iter().map(|(a, b)| (a.to_string(), b)).collect()
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k);
    r
}

fn first_failure(vs: Vec<Verdict>) -> Verdict {
    let worst = vs.iter().map(|v| v.worst_margin).fold(f64::INFINITY, f64::min);
    let used = vs.iter().map(|v| v.samples_used).sum();
    let mut out = vs
        .iter()
        .find(|v| v.status == Status::Falsified)
        .or_else(|| vs.iter().find(|v| v.status == Status::Inconclusive))
        .unwrap_or(&vs[0])
        .clone();
    out.worst_margin = if worst.is_finite() { worst } else { out.worst_margin };
    out.samples_used = used;
    out
}

fn judgments(p1: &Program, p2: &Program, cases: &[(Matrix, Matrix)], gamma: &[SideCondition], cx: &Ctx, seed: u64) -> Result<Verdict> {
    let prep = Prepared::new(p1, p2)?;
    let mut out = Vec::new();
    for (k, (pre, post)) in cases.iter().enumerate() {
        let j = Judgment::new(p1.clone(), p2.clone(), pre.clone(), post.clone()).with_gamma(gamma.to_vec());
        j.validate()?;
        let v = check_prepared(&j, &prep, &cx.sampler(seed + k as u64))?;
        let stop = v.status == Status::Falsified;
        out.push(v);
        if stop {
            break;
        }
    }
    Ok(first_failure(out))
}

fn pure(v: &[C64]) -> Matrix {
    Matrix::projector(v)
}

/// Largest entrywise error of a channel against `want` on every |i⟩⟨j|.
fn channel_error(p: &Program, want: impl Fn(&Matrix) -> Matrix) -> Result<f64> {
    let e = denote(p)?;
    let d = e.d_in();
    let mut err: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let x = Matrix::unit(d, i, j);
            err = err.max(e.apply(&x)?.max_abs_diff(&want(&x)));
        }
    }
    Ok(err)
}

// working-example

fn working_material(_: &Options) -> Result<Material> {
    Ok(Material {
        programs: owned(&[("P1", P1.into()), ("P2", P2.into()), ("Q1", Q1.into()), ("Q2", Q2.into())]),
        predicates: named(vec![("EqB", basis_eq_projector(&Matrix::identity(2))), ("EqSym", sym_projector(2))]),
        files: vec![("outline.json".into(), OUTLINE.into())],
    })
}

fn working(cx: &mut Ctx) -> Result<()> {
    let rho = Matrix::from_real(&[&[5.0, 1.0], &[1.0, 1.0]]).scale_re(1.0 / 6.0);
    for (key, name) in [("p1-output", "P1"), ("p2-output", "P2"), ("q2-output", "Q2")] {
        let out = run(&cx.program(name)?, &rho)?;
        let err = out.max_abs_diff(&cx.expected_matrix(key)?);
        cx.close(key, CheckKind::Semantics, err, format!("{name} on (1/6)[[5,1],[1,1]]"))?;
    }

    let want = &cx.expected("measurement-split")?.value;
    let probs: Vec<f64> = serde_json::from_value(want["probabilities"].clone())?;
    let states: Vec<Matrix> = serde_json::from_value(want["states"].clone())?;
    let m = builtins::measurement("M'", &[2]).ok_or_else(|| Error::Invalid("no M'".into()))?;
    let mut err: f64 = 0.0;
    for (k, op) in m.operators().iter().enumerate() {
        let s = op.sandwich(&rho);
        err = err.max((s.trace().re - probs[k]).abs()).max(s.max_abs_diff(&states[k]));
    }
    cx.close("measurement-split", CheckKind::Semantics, err, "M' on (1/6)[[5,1],[1,1]]")?;

    let opts = CheckOptions { policy: cx.opts.policy, sampler: Sampler { count: 100, ..cx.sampler(1) }, projective: false };
    let outline = Outline::from_json(OUTLINE)?;
    let rep = outline.check(&opts)?;
    let st = if rep.valid { Status::Passed } else { Status::Falsified };
    let steps = rep.derivation.steps.len();
    cx.outcome("outline", CheckKind::Outline, st, 0.0, format!("{steps} steps; {}", rep.conclusion))?;

    let j = Judgment::new(cx.program("P1")?, cx.program("P2")?, cx.predicate("EqB")?, cx.predicate("EqSym")?);
    let v = check_judgment(&j, &cx.sampler(2))?;
    cx.verdict("judgment", CheckKind::Judgment, &v)?;

    let mut weak = outline;
    weak.predicates.insert("I".into(), PredRef::Scale { scale: 0.875, of: Box::new(PredRef::Name("identity".into())) });
    let rep = weak.check(&opts)?;
    let loewner = rep
        .derivation
        .steps
        .iter()
        .flat_map(|s| &s.obligations)
        .find(|o| o.kind == ObligationKind::Loewner && !o.passed);
    let (st, res) = match loewner {
        Some(o) if !rep.valid => (Status::Falsified, o.residual),
        _ => (Status::Passed, 0.0),
    };
    cx.outcome("if-rule-precondition", CheckKind::Outline, st, res, "=_B ⊑ (7/8)·I⊗I")
}

// uniformity-prop

fn uniformity_material(_: &Options) -> Result<Material> {
    let mut programs = Vec::new();
    for d in [2, 3] {
        programs.push((format!("U{d}"), uniform_source(d)));
        programs.push((format!("N{d}"), skip_source("q", d)));
    }
    Ok(Material {
        programs,
        predicates: named(vec![("Phi2", max_entangled_projector(2)), ("Phi3", max_entangled_projector(3))]),
        files: vec![],
    })
}

fn uniformity(cx: &mut Ctx) -> Result<()> {
    let mut seed = 10;
    for d in [2usize, 3] {
        for (name, tag) in [("U", "uniform"), ("N", "skip")] {
            let p = cx.program(&format!("{name}{d}"))?;
            let mut rng = cx.rng(seed);
            let mut inputs: Vec<Matrix> = (0..d).map(|i| Matrix::unit(d, i, i)).collect();
            inputs.extend((0..20).map(|_| random_density(&mut rng, d, d)));
            let mut err: f64 = 0.0;
            for rho in &inputs {
                let out = run(&p, rho)?;
                for i in 0..d {
                    err = err.max((out[(i, i)].re - 1.0 / d as f64).abs());
                }
            }
            let st = if err <= 1e-9 { Status::Passed } else { Status::Falsified };
            cx.outcome(&format!("clause1-d{d}-{tag}"), CheckKind::Semantics, st, err, format!("{} inputs", inputs.len()))?;

            let posts: Vec<Matrix> = (0..d).map(|i| Matrix::unit(d, i, i).kron(&Matrix::identity(d))).collect();
            let white = Matrix::identity(d * d).scale_re(1.0 / d as f64);
            let cases: Vec<(Matrix, Matrix)> = posts.iter().map(|b| (white.clone(), b.clone())).collect();
            let v = judgments(&p, &p, &cases, &[], cx, seed)?;
            cx.verdict(&format!("clause2-d{d}-{tag}"), CheckKind::Judgment, &v)?;

            let phi = max_entangled_projector(d);
            let cases: Vec<(Matrix, Matrix)> = posts.iter().map(|b| (phi.clone(), b.clone())).collect();
            let gamma = [SideCondition::separable_sides(&p, &p)?];
            let v = judgments(&p, &p, &cases, &gamma, cx, seed + 5)?;
            cx.verdict(&format!("clause3-d{d}-{tag}"), CheckKind::Judgment, &v)?;
            seed += 10;
        }
    }
    Ok(())
}

// qbf-uniformity

fn random_coin(opts: &Options) -> Matrix {
    let mut rng = stream(opts.seed, 7);
    loop {
        let u = random_unitary(&mut rng, 2);
        let a = u[(0, 0)].norm();
        // A real coin up to phase fixes (|00⟩+|11⟩)/√2 and the loop never exits.
        let drift = u.matmul(&u.transpose())[(0, 1)].norm();
        if (0.1..0.9).contains(&a) && drift > 0.2 {
            return u;
        }
    }
}

fn qbf_material(opts: &Options) -> Result<Material> {
    let u = random_coin(opts);
    Ok(Material {
        programs: owned(&[
            ("QBF_U", qbf_source(&u, true)),
            ("QBF_U_untraced", qbf_source(&u, false)),
            ("QBF_H", qbf_source(&hadamard(), true)),
        ]),
        predicates: named(vec![("U", u), ("pre", Matrix::identity(16).scale_re(0.5))]),
        files: vec![],
    })
}

fn lossless(cx: &mut Ctx, key: &str, name: &str) -> Result<()> {
    let rep = is_lossless(&cx.program(name)?)?;
    let st = if rep.lossless { Status::Passed } else { Status::Falsified };
    cx.outcome(key, CheckKind::Semantics, st, 0.0, name)
}

fn qbf(cx: &mut Ctx) -> Result<()> {
    let mut rng = cx.rng(1);
    let inputs: Vec<Matrix> = (0..20).map(|_| random_density(&mut rng, 4, 4)).collect();
    for (key, name) in [("uniform-output-random-u", "QBF_U"), ("uniform-output-h", "QBF_H")] {
        let want = cx.expected_matrix(key)?;
        let e = denote(&cx.program(name)?)?;
        let mut err: f64 = 0.0;
        for rho in &inputs {
            err = err.max(e.apply(rho)?.max_abs_diff(&want));
        }
        cx.close(key, CheckKind::Semantics, err, format!("{name}; {} inputs", inputs.len()))?;
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bell = [0.0, s, s, 0.0].map(|x| C64::new(x, 0.0));
    let e = denote(&cx.program("QBF_U_untraced")?)?;
    let mut gap: f64 = 0.0;
    for rho in &inputs {
        gap = gap.max(1.0 - overlap(&bell, &e.apply(rho)?));
    }
    cx.close("bell-without-trace", CheckKind::Semantics, gap, "1 − fidelity with (|01⟩+|10⟩)/√2")?;
    lossless(cx, "lossless", "QBF_U")?;
    lossless(cx, "lossless-h", "QBF_H")?;

    let mut psis = vec![ket0(), ket1(), ket_plus()];
    let mut rng = cx.rng(2);
    psis.extend((0..5).map(|_| random_pure(&mut rng, 2)));
    let pre = cx.predicate("pre")?;
    let cases: Vec<(Matrix, Matrix)> = psis.iter().map(|psi| (pre.clone(), pure(psi).kron(&Matrix::identity(2)))).collect();
    let p = cx.program("QBF_U")?;
    let v = judgments(&p, &p, &cases, &[], cx, 3)?;
    cx.verdict("judgment", CheckKind::Judgment, &v)
}

// teleportation

fn random_basis(opts: &Options) -> Matrix {
    let mut rng = stream(opts.seed, 11);
    random_unitary(&mut rng, 2)
}

fn teleport_material(opts: &Options) -> Result<Material> {
    let eq_b = basis_eq_projector(&random_basis(opts));
    let shape = Shape::new(vec![2, 2, 2, 2])?;
    Ok(Material {
        programs: owned(&[("QTEL", qtel_source(None)), ("SKIP", skip_source("p", 2))]),
        predicates: named(vec![
            ("EqB_in", embed(&eq_b, &shape, &[0, 3])?),
            ("EqB", eq_b),
            ("EqSym_in", embed(&sym_projector(2), &shape, &[0, 3])?),
            ("EqSym", sym_projector(2)),
        ]),
        files: vec![],
    })
}

fn teleport_correct(cx: &mut Ctx) -> Result<()> {
    let e = denote(&cx.program("QTEL")?)?;
    let mut rng = cx.rng(1);
    let mut err: f64 = 0.0;
    for _ in 0..20 {
        let rho = random_density(&mut rng, 2, 2);
        let junk = random_density(&mut rng, 4, 4);
        err = err.max(e.apply(&rho.kron(&junk))?.max_abs_diff(&rho));
    }
    cx.close("identity-output", CheckKind::Semantics, err, "20 random inputs on p with arbitrary q, r")?;
    let (tel, skip) = (cx.program("QTEL")?, cx.program("SKIP")?);
    let v = judgments(&tel, &skip, &[(cx.predicate("EqB_in")?, cx.predicate("EqB")?)], &[], cx, 2)?;
    cx.verdict("basis-equality", CheckKind::Judgment, &v)?;
    let v = judgments(&tel, &skip, &[(cx.predicate("EqSym_in")?, cx.predicate("EqSym")?)], &[], cx, 3)?;
    cx.verdict("symmetric-equality", CheckKind::Judgment, &v)
}

fn noise_material(opts: &Options, n: Noise) -> Result<Material> {
    Ok(Material {
        programs: owned(&[("QTEL_noisy", qtel_source(Some((n, opts.noise)))), ("QTEL", qtel_source(None))]),
        predicates: vec![],
        files: vec![],
    })
}

fn bitflip_material(o: &Options) -> Result<Material> {
    noise_material(o, Noise::BitFlip)
}
fn phaseflip_material(o: &Options) -> Result<Material> {
    noise_material(o, Noise::PhaseFlip)
}
fn bitphaseflip_material(o: &Options) -> Result<Material> {
    noise_material(o, Noise::BitPhaseFlip)
}
fn bitflip(cx: &mut Ctx) -> Result<()> {
    teleport_noise(cx, Noise::BitFlip)
}
fn phaseflip(cx: &mut Ctx) -> Result<()> {
    teleport_noise(cx, Noise::PhaseFlip)
}
fn bitphaseflip(cx: &mut Ctx) -> Result<()> {
    teleport_noise(cx, Noise::BitPhaseFlip)
}

fn teleport_noise(cx: &mut Ctx, n: Noise) -> Result<()> {
    let pe = n.effective(cx.opts.noise);
    let noisy = cx.program("QTEL_noisy")?;
    let e = denote(&noisy)?;
    let z = pauli_z();
    let zero2 = Matrix::unit(4, 0, 0);
    let mut rng = cx.rng(1);
    let mut slack = f64::INFINITY;
    for _ in 0..20 {
        let psi = random_pure(&mut rng, 2);
        let out = e.apply(&pure(&psi).kron(&zero2))?;
        let zz = z.expect(&pure(&psi));
        slack = slack.min(overlap(&psi, &out) - (pe + (1.0 - pe) * zz * zz));
    }
    cx.at_least("fidelity-bound", CheckKind::Semantics, slack, format!("p = {}; 20 random |ψ⟩", cx.opts.noise))?;

    let pf = Noise::PhaseFlip.kraus(pe);
    let i4 = Matrix::identity(4);
    let mut psis = vec![ket_plus()];
    let mut rng = cx.rng(2);
    psis.extend((0..2).map(|_| random_pure(&mut rng, 2)));
    let mut cases = Vec::new();
    for psi in &psis {
        let left = apply_kraus(&pf, &pure(psi))?.kron(&i4);
        let right = pure(psi).kron(&i4);
        cases.push((left.kron(&right), pure(psi).kron(&pure(psi))));
    }
    let v = judgments(&noisy, &cx.program("QTEL")?, &cases, &[], cx, 3)?;
    cx.verdict("judgment", CheckKind::Judgment, &v)
}

// one-time pad

fn qotp_material(_: &Options) -> Result<Material> {
    Ok(Material {
        programs: owned(&[
            ("QOTP", qotp_correct_source(1)),
            ("QOTP_enc", qotp_secure_source(1)),
            ("SKIP", qotp_skip_source(1)),
        ]),
        predicates: named(vec![("EqSym", sym_projector(2)), ("pre", Matrix::identity(4).scale_re(0.5))]),
        files: vec![],
    })
}

fn qotp_correct(cx: &mut Ctx) -> Result<()> {
    let err = channel_error(&cx.program("QOTP")?, |x| x.clone())?;
    cx.close("identity-channel", CheckKind::Semantics, err, "all |i⟩⟨j|")?;
    let sym = cx.predicate("EqSym")?;
    let v = judgments(&cx.program("QOTP")?, &cx.program("SKIP")?, &[(sym.clone(), sym)], &[], cx, 1)?;
    cx.verdict("symmetric-equality", CheckKind::Judgment, &v)
}

fn security(cx: &mut Ctx, enc: &str, d: usize, psis: &[Vec<C64>], seed: u64) -> Result<()> {
    let want = cx.expected_matrix("output")?;
    let err = channel_error(&cx.program(enc)?, |x| want.scale(x.trace()))?;
    cx.close("output", CheckKind::Semantics, err, "E(X) = tr(X)·I/d on all |i⟩⟨j|")?;
    let pre = Matrix::identity(d * d).scale_re(1.0 / d as f64);
    let cases: Vec<(Matrix, Matrix)> = psis.iter().map(|psi| (pre.clone(), pure(psi).kron(&Matrix::identity(d)))).collect();
    let p = cx.program(enc)?;
    let v = judgments(&p, &p, &cases, &[], cx, seed)?;
    cx.verdict("security-judgment", CheckKind::Judgment, &v)
}

fn qotp_secure(cx: &mut Ctx) -> Result<()> {
    let mut rng = cx.rng(1);
    let psis = vec![ket0(), ket_minus(), random_pure(&mut rng, 2)];
    security(cx, "QOTP_enc", 2, &psis, 2)
}

fn qotp_n_material(_: &Options) -> Result<Material> {
    Ok(Material {
        programs: owned(&[
            ("QOTP2", qotp_correct_source(2)),
            ("QOTP2_enc", qotp_secure_source(2)),
            ("SKIP2", qotp_skip_source(2)),
        ]),
        predicates: named(vec![("EqSym", sym_projector(4)), ("pre", Matrix::identity(16).scale_re(0.25))]),
        files: vec![],
    })
}

fn qotp_n(cx: &mut Ctx) -> Result<()> {
    let err = channel_error(&cx.program("QOTP2")?, |x| x.clone())?;
    cx.close("identity-channel", CheckKind::Semantics, err, "all |i⟩⟨j| on p1 p2")?;
    let sym = cx.predicate("EqSym")?;
    let v = judgments(&cx.program("QOTP2")?, &cx.program("SKIP2")?, &[(sym.clone(), sym)], &[], cx, 1)?;
    cx.verdict("symmetric-equality", CheckKind::Judgment, &v)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bell = [s, 0.0, 0.0, s].map(|x| C64::new(x, 0.0)).to_vec();
    let mut rng = cx.rng(2);
    let psis = vec![bell, random_pure(&mut rng, 4)];
    security(cx, "QOTP2_enc", 4, &psis, 3)
}

// quantum walks

fn walk_post(n: usize) -> Matrix {
    let dp = n + 1;
    let mut ends = vec![0.0; dp];
    ends[0] = 1.0;
    ends[n] = 1.0;
    let e = Matrix::diag_real(&ends);
    e.kron(&e).matmul(&sym_projector(dp))
}

fn walk_material(opts: &Options) -> Result<Material> {
    let n = opts.walk_n;
    if n < 2 {
        return Err(Error::Invalid("walk size must be at least 2".into()));
    }
    let d = 2 * (n + 1);
    let u = Matrix::identity(d).kron(&walk_phase(n));
    Ok(Material {
        programs: owned(&[("QW_H", walk_source(n, Coin::Hadamard)), ("QW_Y", walk_source(n, Coin::Balanced))]),
        predicates: named(vec![
            ("U", walk_phase(n)),
            ("pre", u.matmul(&sym_projector(d)).matmul(&u.dagger()).hermitian_part()),
            ("post", walk_post(n)),
        ]),
        files: vec![],
    })
}

fn position_tv(h: &crate::semantics::SemanticFn, y: &crate::semantics::SemanticFn, u: &Matrix, inputs: &[Matrix]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for rho in inputs {
        let a = h.apply(rho)?;
        let b = y.apply(&u.sandwich(rho))?;
        let pa: Vec<f64> = (0..a.rows()).map(|i| a[(i, i)].re).collect();
        let pb: Vec<f64> = (0..b.rows()).map(|i| b[(i, i)].re).collect();
        worst = worst.max(total_variation(&pa, &pb));
    }
    Ok(worst)
}

fn walk(cx: &mut Ctx) -> Result<()> {
    let n = cx.opts.walk_n;
    let (ph, py) = (cx.program("QW_H")?, cx.program("QW_Y")?);
    let (h, y) = (denote(&ph)?, denote(&py)?);
    let d = 2 * (n + 1);
    let mut rng = cx.rng(1);
    let inputs: Vec<Matrix> = (0..20).map(|_| random_density(&mut rng, d, d)).collect();
    let tv = position_tv(&h, &y, &cx.predicate("U")?, &inputs)?;
    cx.close("position-distribution", CheckKind::Semantics, tv, format!("n = {n}; 20 random inputs"))?;

    let tv = position_tv(&h, &y, &walk_phase_literal(n), &inputs)?;
    let st = if tv <= 1e-6 { Status::Passed } else { Status::Falsified };
    cx.outcome("literal-phase", CheckKind::Semantics, st, tv, "phase i^(i+d+3)")?;

    let ok = is_lossless(&ph)?.lossless && is_lossless(&py)?.lossless;
    cx.outcome("lossless", CheckKind::Semantics, if ok { Status::Passed } else { Status::Falsified }, 0.0, "")?;

    let v = check_projective_judgment(&ph, &py, &cx.predicate("pre")?, &cx.predicate("post")?, &cx.sampler(2))?;
    cx.verdict("projective-judgment", CheckKind::Projective, &v)
}

// comparability-demo

fn comparability_material(_: &Options) -> Result<Material> {
    Ok(Material {
        programs: owned(&[
            ("Q1", Q1.into()),
            ("Q2", Q2.into()),
            ("L1", LOOPS_LEFT.into()),
            ("L2", LOOPS_RIGHT.into()),
        ]),
        predicates: vec![],
        files: vec![],
    })
}

fn profile_gap(p1: &Program, r1: &Matrix, p2: &Program, r2: &Matrix, depth: usize) -> Result<f64> {
    let a = outcome_profile(p1, r1, depth)?;
    let b = outcome_profile(p2, r2, depth)?;
    Ok(a.keys()
        .chain(b.keys())
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max))
}

fn comparability(cx: &mut Ctx) -> Result<()> {
    let (q1, q2) = (cx.program("Q1")?, cx.program("Q2")?);
    let c = collect_constraints(&q1, &q2)?;
    let rho = &Matrix::unit(2, 0, 0).kron(&pure(&ket_plus())).scale_re(0.5)
        + &Matrix::unit(2, 1, 1).kron(&pure(&ket_minus())).scale_re(0.5);
    let (r1, r2) = marginals(&rho, 2, 2)?;
    let gap = profile_gap(&q1, &r1, &q2, &r2, 4)?;
    let ok = check_comparability(&c, &r1, &r2)? && gap <= 1e-12;
    let st = if ok { Status::Passed } else { Status::Falsified };
    cx.outcome("example-input-accepted", CheckKind::Comparability, st, gap, format!("{} constraints", c.len()))?;

    let z = Matrix::unit(2, 0, 0);
    let defect = c.max_defect(&z, &z)?;
    let st = if check_comparability(&c, &z, &z)? { Status::Passed } else { Status::Falsified };
    cx.outcome("basis-input-rejected", CheckKind::Comparability, st, defect, "|0⟩ on both sides")?;

    let (l1, l2) = (cx.program("L1")?, cx.program("L2")?);
    let c = collect_constraints(&l1, &l2)?;
    let bound = 8;
    let st = if c.len() <= bound { Status::Passed } else { Status::Falsified };
    cx.outcome("loop-constraint-count", CheckKind::Comparability, st, c.len() as f64, format!("at most {bound}"))?;

    let hs: Vec<Matrix> =
        c.pairs.iter().map(|(a, b)| &a.kron(&Matrix::identity(2)) - &Matrix::identity(2).kron(b)).collect();
    let mut rng = cx.rng(1);
    let (mut tested, mut worst) = (0, 0.0f64);
    for _ in 0..400 {
        if tested == 50 {
            break;
        }
        let start = &pure(&random_pure(&mut rng, 4)).scale_re(0.5) + &Matrix::identity(4).scale_re(0.125);
        let Some(rho) = project_to_slice(&start, &hs) else { continue };
        let (r1, r2) = marginals(&rho, 2, 2)?;
        if !check_comparability(&c, &r1, &r2)? {
            continue;
        }
        worst = worst.max(profile_gap(&l1, &r1, &l2, &r2, 8)?);
        tested += 1;
    }
    if tested < 50 {
        worst = f64::INFINITY;
    }
    cx.close("slice-agreement", CheckKind::Comparability, worst, format!("{tested} constrained inputs; depth 8"))
}

// projective-separation

fn separation_material(_: &Options) -> Result<Material> {
    Ok(Material {
        programs: owned(&[("X", PROJ_LEFT.into()), ("HH", PROJ_RIGHT.into())]),
        predicates: named(vec![("Phi", max_entangled_projector(2))]),
        files: vec![],
    })
}

fn separation(cx: &mut Ctx) -> Result<()> {
    let (p1, p2, phi) = (cx.program("X")?, cx.program("HH")?, cx.predicate("Phi")?);
    let v = check_projective_judgment(&p1, &p2, &phi, &phi, &cx.sampler(1))?;
    cx.verdict("projective-check", CheckKind::Projective, &v)?;
    let v = check_judgment(&Judgment::new(p1, p2, phi.clone(), phi), &cx.sampler(2))?;
    cx.verdict("general-check", CheckKind::Judgment, &v)?;
    let err = match &v.counterexample {
        Some(ce) => ce.max_abs_diff(&cx.expected_matrix("counterexample")?),
        None => f64::INFINITY,
    };
    cx.close("counterexample", CheckKind::Judgment, err, "first falsifying input against |00⟩⟨00|")
}
