//! Single-rule derivations checked against sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rqpd_core::judgment::{check_judgment, check_projective_judgment, Judgment, Sampler, SideCondition, Status};
use rqpd_core::lang::{matrix_literal, Program, Scope};
use rqpd_core::linalg::random::{random_predicate, random_unitary};
use rqpd_core::linalg::{basis_eq_projector, Matrix};
use rqpd_core::rules::*;

pub const INSTANCES: u64 = 10;
pub const SAMPLES: usize = 100;

struct World {
    scope: Scope,
    big: Scope,
    n: [Matrix; 2],
    rng: ChaCha8Rng,
}

fn kraus_literal(w: &Matrix) -> String {
    let k0 = Matrix::from_rows(&[vec![w[(0, 0)], w[(0, 1)]], vec![w[(1, 0)], w[(1, 1)]]]);
    let k1 = Matrix::from_rows(&[vec![w[(2, 0)], w[(2, 1)]], vec![w[(3, 0)], w[(3, 1)]]]);
    format!("kraus {{ {}, {} }}", matrix_literal(&k0), matrix_literal(&k1))
}

impl World {
    fn new(seed: u64) -> World {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(&mut rng, 2);
        let v = random_unitary(&mut rng, 2);
        let b = random_unitary(&mut rng, 2);
        let n = [0, 1].map(|k| b.sandwich(&Matrix::unit(2, k, k)));
        // Channels from random isometries C^2 → C^2 ⊗ C^2.
        let e = kraus_literal(&random_unitary(&mut rng, 4));
        let f = kraus_literal(&random_unitary(&mut rng, 4));
        let lets = format!(
            "let U = {}; let V = {}; let E = {e}; let F = {f}; let N = meas {{ 0: {}, 1: {} }};",
            matrix_literal(&u),
            matrix_literal(&v),
            matrix_literal(&n[0]),
            matrix_literal(&n[1])
        );
        let scope = Scope::of(&format!("var q : 2; {lets} skip")).unwrap();
        let big = Scope::of(&format!("var q : 2, r : 2; {lets} skip")).unwrap();
        World { scope, big, n, rng }
    }

    fn p(&self, src: &str) -> Program {
        self.scope.fragment(src).unwrap()
    }

    fn pred(&mut self) -> Matrix {
        random_predicate(&mut self.rng, 4)
    }
}

const CASE: &str = "if N[q] = 0 -> q := U[q] [] 1 -> q := V[q] fi";
const BRANCHES: [&str; 2] = ["q := U[q]", "q := V[q]"];
const LOOP: &str = "while N[q] = 1 do q := U[q] od";

fn bw(rule: Rule, l: &Program, r: &Program, post: Matrix, prem: Vec<Derivation>) -> Derivation {
    Derivation::backward(rule, l.clone(), r.clone(), post, prem).unwrap()
}

fn weakened(d: Derivation, pre: Matrix) -> Derivation {
    Derivation::new(Rule::Conseq, d.left.clone(), d.right.clone(), pre, d.post.clone()).with_premises(vec![d])
}

fn build(rule: Rule, w: &mut World) -> Derivation {
    use Rule::*;
    let skip = w.p("skip");
    let post = w.pred();
    let atom = |w: &World, s: &str| match rule.sides() {
        Sides::Both => (w.p(s), w.p(&s.replace('U', "V").replace('E', "F"))),
        Sides::Only(rqpd_core::judgment::Side::Left) => (w.p(s), w.p("skip")),
        Sides::Only(rqpd_core::judgment::Side::Right) => (w.p("skip"), w.p(s)),
    };
    match rule {
        Skip => bw(Skip, &skip, &skip, post, vec![]),
        Init | InitL | InitR => {
            let (l, r) = atom(w, "q := |0>");
            bw(rule, &l, &r, post, vec![])
        }
        Ut | UtL | UtR => {
            let (l, r) = atom(w, "q := U[q]");
            bw(rule, &l, &r, post, vec![])
        }
        So | SoL | SoR => {
            let (l, r) = atom(w, "q := E[q]");
            bw(rule, &l, &r, post, vec![])
        }
        Sc => {
            let (u, v) = (w.p("q := U[q]"), w.p("q := V[q]"));
            let second = bw(Ut, &v, &u, post, vec![]);
            let first = bw(Ut, &u, &v, second.pre.clone(), vec![]);
            first.then(second).unwrap()
        }
        If | IfW => {
            let c = w.p(CASE);
            let pairs: Vec<(usize, usize)> =
                if rule == If { vec![(0, 0), (0, 1), (1, 0), (1, 1)] } else { vec![(0, 0), (1, 1)] };
            let prem = pairs.iter().map(|&(m, n)| bw(Ut, &w.p(BRANCHES[m]), &w.p(BRANCHES[n]), post.clone(), vec![])).collect();
            bw(rule, &c, &c, post, prem)
        }
        IfL | IfR => {
            let c = w.p(CASE);
            let prem = BRANCHES
                .iter()
                .map(|b| {
                    let (l, r, r1) = if rule == IfL { (w.p(b), skip.clone(), UtL) } else { (skip.clone(), w.p(b), UtR) };
                    bw(r1, &l, &r, post.clone(), vec![])
                })
                .collect();
            let (l, r) = if rule == IfL { (c, skip) } else { (skip, c) };
            bw(rule, &l, &r, post, prem)
        }
        If1 => {
            let c = w.p(CASE);
            let prem: Vec<Derivation> = BRANCHES.iter().map(|b| bw(Ut, &w.p(b), &w.p(b), post.clone(), vec![])).collect();
            let mut pre = Matrix::zeros(4, 4);
            for (k, p) in prem.iter().enumerate() {
                pre = &pre + &w.n[k].kron(&w.n[k]).sandwich_dual(&p.pre);
            }
            let meas = w.scope.measurement("N", &["q".into()]).unwrap();
            let q = ["q".to_string()];
            let gamma = SideCondition::meas_eq(&w.scope.program, &meas, &q, &w.scope.program, &meas, &q).unwrap();
            Derivation::new(If1, c.clone(), c, pre.hermitian_part(), post).with_premises(prem).with_gamma(vec![gamma])
        }
        Lp | LpL | LpR => {
            let lp = w.p(LOOP);
            let body = w.p("q := U[q]");
            let (l, r, bl, br, inner) = match rule {
                Lp => (lp.clone(), lp, body.clone(), body, Ut),
                LpL => (lp, skip.clone(), body, skip, UtL),
                _ => (skip.clone(), lp, skip, body, UtR),
            };
            let exit = match rule {
                Lp => w.n[0].kron(&w.n[0]),
                LpL => w.n[0].kron(&Matrix::identity(2)),
                _ => Matrix::identity(2).kron(&w.n[0]),
            };
            let inv = exit.sandwich_dual(&post);
            let prem = weakened(bw(inner, &bl, &br, inv, vec![]), Matrix::zeros(4, 4));
            bw(rule, &l, &r, post, vec![prem])
        }
        Conseq => {
            let d = bw(Ut, &w.p("q := U[q]"), &w.p("q := V[q]"), post, vec![]);
            let pre = d.pre.scale_re(0.6);
            weakened(d, pre)
        }
        Case => {
            let (u, v) = (w.p("q := U[q]"), w.p("q := V[q]"));
            let a = bw(Ut, &u, &v, post.clone(), vec![]);
            let b = weakened(bw(Ut, &u, &v, post.clone(), vec![]), w.pred().scale_re(0.0));
            let p = 0.3;
            let pre = (&a.pre.scale_re(p) + &b.pre.scale_re(1.0 - p)).hermitian_part();
            Derivation::new(Case, u, v, pre, post)
                .with_premises(vec![a, b])
                .with_payload(Payload { probs: vec![p, 1.0 - p], ..Payload::default() })
        }
        Frame => {
            let (u, v) = (w.p("q := U[q]"), w.p("q := V[q]"));
            let (ub, vb) = (w.big.fragment("q := U[q]").unwrap(), w.big.fragment("q := V[q]").unwrap());
            let prem = bw(Ut, &u, &v, post, vec![]);
            let c = basis_eq_projector(&random_unitary(&mut w.rng, 2));
            let frame = FrameSpec { left: vec!["r".into()], right: vec!["r".into()], c: c.clone() };
            let pre = frame_split(&prem.pre, &c, 2, 2, 2, 2).unwrap();
            let post = frame_split(&prem.post, &c, 2, 2, 2, 2).unwrap();
            let sep = SideCondition::separability(
                &ub,
                &vb,
                &[vec!["r<1>".into(), "r<2>".into()], vec!["q<1>".into(), "q<2>".into()]],
            )
            .unwrap();
            Derivation::new(Frame, ub, vb, pre, post)
                .with_premises(vec![prem])
                .with_payload(Payload { frame: Some(frame), ..Payload::default() })
                .with_gamma(vec![sep])
        }
        InitP | SoP => {
            let (l, r) = if rule == InitP { (w.p("q := |0>"), w.p("q := |0>")) } else { (w.p("q := E[q]"), w.p("q := F[q]")) };
            let pre = basis_eq_projector(&random_unitary(&mut w.rng, 2));
            Derivation::forward(rule, l, r, pre).unwrap()
        }
        _ => unreachable!("rule not in the harness"),
    }
}

pub const RULES: &[Rule] = &[
    Rule::Skip,
    Rule::Init,
    Rule::InitL,
    Rule::InitR,
    Rule::Ut,
    Rule::UtL,
    Rule::UtR,
    Rule::So,
    Rule::SoL,
    Rule::SoR,
    Rule::Sc,
    Rule::If,
    Rule::IfW,
    Rule::IfL,
    Rule::IfR,
    Rule::If1,
    Rule::Lp,
    Rule::LpL,
    Rule::LpR,
    Rule::Conseq,
    Rule::Case,
    Rule::Frame,
    Rule::InitP,
    Rule::SoP,
];

/// Builds, checks and samples `INSTANCES` derivations per rule. Returns the
/// number of sampled judgments.
pub fn harness() -> usize {
    let mut checked = 0;
    for (k, &rule) in RULES.iter().enumerate() {
        for i in 0..INSTANCES {
            let seed = 1000 * k as u64 + i;
            let mut w = World::new(seed);
            let d = build(rule, &mut w);
            let projective = rule.is_projective();
            let opts = CheckOptions { projective, sampler: Sampler::new(50, seed), ..CheckOptions::default() };
            let rep = check_derivation(&d, &opts);
            assert!(rep.valid, "{rule} instance {i} does not check:\n{rep}");
            let sampler = Sampler::new(SAMPLES, seed);
            let v = if projective {
                check_projective_judgment(&d.left, &d.right, &d.pre, &d.post, &sampler).unwrap()
            } else {
                let j = Judgment::new(d.left.clone(), d.right.clone(), d.pre.clone(), d.post.clone()).with_gamma(d.gamma.clone());
                check_judgment(&j, &sampler).unwrap()
            };
            assert_eq!(v.status, Status::Passed, "{rule} instance {i}: margin {}", v.worst_margin);
            assert!(v.samples_used >= SAMPLES, "{rule} instance {i}: only {} samples", v.samples_used);
            checked += 1;
        }
    }
    checked
}
