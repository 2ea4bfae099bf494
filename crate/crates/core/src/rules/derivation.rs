use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::judgment::{
    check_couple_entailment, check_meas_judgment_sampled, check_projective_meas_judgment, MeasSpec, Sampler, Side,
    SideCondition, Verdict,
};
use crate::lang::{pretty_body, Program, Stmt};
use crate::linalg::{is_projector, min_eigenvalue, Matrix};
use crate::semantics::is_lossless;

use super::rule::{Rule, Sides};
use super::transform::{
    ensure_predicate, frame_dim, frame_split, guard_of, loop_invariant, postcondition_of, precondition_of, single, FrameSpec,
    Payload, RuleInstance,
};

/// Tolerance for matching predicates between steps.
pub const MATCH_TOL: f64 = 1e-8;

/// How losslessness side conditions are treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Every obligation is discharged.
    #[default]
    Strict,
    /// Losslessness obligations are recorded as assumptions.
    AssumeLossless,
}

impl FromStr for Policy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Policy> {
        match s {
            "strict" => Ok(Policy::Strict),
            "assume-lossless" => Ok(Policy::AssumeLossless),
            _ => Err(Error::Invalid(format!("unknown policy {s}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObligationKind {
    Lossless,
    Loewner,
    MeasurementJudgment,
    CoupleEntailment,
    Invariant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discharge {
    Analytic,
    JudgmentEngine,
    UncheckedAssumption,
}

#[derive(Clone, Debug, Serialize)]
pub struct Obligation {
    pub kind: ObligationKind,
    pub description: String,
    pub discharge: Discharge,
    pub passed: bool,
    /// Size of the violation; zero when the obligation holds.
    pub residual: f64,
    /// Number of sampled inputs, for obligations checked by sampling.
    pub samples: Option<usize>,
}

impl Obligation {
    fn analytic(kind: ObligationKind, description: String, residual: f64) -> Obligation {
        Obligation { kind, description, discharge: Discharge::Analytic, passed: residual <= MATCH_TOL, residual, samples: None }
    }

    fn sampled(kind: ObligationKind, description: String, v: &Verdict) -> Obligation {
        Obligation {
            kind,
            description,
            discharge: Discharge::JudgmentEngine,
            passed: v.passed(),
            residual: (-v.worst_margin).max(0.0),
            samples: Some(v.samples_used),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StepReport {
    /// Position in the tree: premise indices separated by dots.
    pub path: String,
    pub rule: Rule,
    pub judgment: String,
    pub ok: bool,
    pub error: Option<String>,
    pub obligations: Vec<Obligation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivationReport {
    pub valid: bool,
    pub steps: Vec<StepReport>,
}

impl DerivationReport {
    pub fn failures(&self) -> impl Iterator<Item = &StepReport> {
        self.steps.iter().filter(|s| !s.ok)
    }
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub policy: Policy,
    pub sampler: Sampler,
    /// Check in the projective proof system.
    pub projective: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { policy: Policy::Strict, sampler: Sampler::new(100, 0), projective: false }
    }
}

/// A derivation tree of Γ ⊢ P₁ ∼ P₂ : A ⇒ B.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub rule: Rule,
    pub left: Program,
    pub right: Program,
    pub gamma: Vec<SideCondition>,
    pub pre: Matrix,
    pub post: Matrix,
    pub premises: Vec<Derivation>,
    /// Case pairs, case weights and frame data. Predicates of premises are
    /// taken from the premises themselves.
    pub payload: Payload,
    /// Display names of the pre- and postcondition.
    pub names: (Option<String>, Option<String>),
}

impl Derivation {
    pub fn new(rule: Rule, left: Program, right: Program, pre: Matrix, post: Matrix) -> Derivation {
        Derivation {
            rule,
            left,
            right,
            gamma: vec![],
            pre,
            post,
            premises: vec![],
            payload: Payload::default(),
            names: (None, None),
        }
    }

    /// An atomic or backward step whose precondition is computed from the
    /// premises and the postcondition.
    pub fn backward(rule: Rule, left: Program, right: Program, post: Matrix, premises: Vec<Derivation>) -> Result<Derivation> {
        let mut d = Derivation::new(rule, left, right, Matrix::zeros(0, 0), post);
        d.premises = premises;
        d.pre = precondition_of(&d.instance(), &d.post)?;
        Ok(d)
    }

    /// A forward projective step.
    pub fn forward(rule: Rule, left: Program, right: Program, pre: Matrix) -> Result<Derivation> {
        let mut d = Derivation::new(rule, left, right, pre, Matrix::zeros(0, 0));
        d.post = postcondition_of(&d.instance(), &d.pre)?;
        Ok(d)
    }

    /// Sequential composition of two derivations, by (SC) when their
    /// contexts agree and by (SC+) otherwise.
    pub fn then(self, next: Derivation) -> Result<Derivation> {
        let rule = if gamma_eq(&self.gamma, &next.gamma) { Rule::Sc } else { Rule::ScPlus };
        let left = seq_program(&self.left, &next.left)?;
        let right = seq_program(&self.right, &next.right)?;
        let mut d = Derivation::new(rule, left, right, self.pre.clone(), next.post.clone());
        d.gamma = self.gamma.clone();
        d.names = (self.names.0.clone(), next.names.1.clone());
        d.premises = vec![self, next];
        Ok(d)
    }

    pub fn with_gamma(mut self, gamma: Vec<SideCondition>) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_premises(mut self, premises: Vec<Derivation>) -> Self {
        self.premises = premises;
        self
    }

    pub fn with_payload(mut self, payload: Payload) -> Self {
        self.payload = payload;
        self
    }

    pub fn with_names(mut self, pre: impl Into<String>, post: impl Into<String>) -> Self {
        self.names = (Some(pre.into()), Some(post.into()));
        self
    }

    /// The rule instance with premise predicates filled in.
    pub fn instance(&self) -> RuleInstance {
        use Rule::*;
        let mut payload = self.payload.clone();
        match self.rule {
            If | IfW | IfL | IfR => payload.branch_pres = self.premises.iter().map(|p| p.pre.clone()).collect(),
            Lp | LpL | LpR => payload.loop_pre = self.premises.first().map(|p| p.pre.clone()),
            Conseq | Weaken | Frame => payload.pre = self.premises.first().map(|p| p.pre.clone()),
            Case => payload.case_pres = self.premises.iter().map(|p| p.pre.clone()).collect(),
            _ => payload.pre = Some(self.pre.clone()),
        }
        RuleInstance { rule: self.rule, left: self.left.clone(), right: self.right.clone(), payload }
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    /// The concluded judgment in readable form.
    pub fn describe(&self) -> String {
        let g: Vec<String> = self.gamma.iter().map(SideCondition::describe).collect();
        let show = |n: &Option<String>, m: &Matrix| n.clone().unwrap_or_else(|| format!("<{}x{}>", m.rows(), m.cols()));
        format!(
            "{{{}}} ⊢ {} ∼ {} : {} ⇒ {}",
            g.join(", "),
            pretty_body(&self.left),
            pretty_body(&self.right),
            show(&self.names.0, &self.pre),
            show(&self.names.1, &self.post)
        )
    }
}

fn seq_program(a: &Program, b: &Program) -> Result<Program> {
    let mut regs = a.registers.clone();
    for r in &b.registers {
        if !regs.iter().any(|x| x.name == r.name) {
            regs.push(r.clone());
        }
    }
    Program::new(regs, Stmt::seq(vec![a.body.clone(), b.body.clone()]))
}

fn same_body(p: &Program, s: &Stmt) -> bool {
    p.body.without_skips() == s.without_skips()
}

fn cond_eq(a: &SideCondition, b: &SideCondition) -> bool {
    let ops_eq = |x: &MeasSpec, y: &MeasSpec| {
        x.labels == y.labels
            && x.ops.len() == y.ops.len()
            && x.ops.iter().zip(&y.ops).all(|(p, q)| p.dims() == q.dims() && p.approx_eq(q, MATCH_TOL))
    };
    match (a, b) {
        (SideCondition::MeasEq { left: l1, right: r1 }, SideCondition::MeasEq { left: l2, right: r2 }) => {
            ops_eq(l1, l2) && ops_eq(r1, r2)
        }
        (SideCondition::MeasLoopEq { left: l1, right: r1 }, SideCondition::MeasLoopEq { left: l2, right: r2 }) => {
            ops_eq(&l1.guard, &l2.guard)
                && ops_eq(&r1.guard, &r2.guard)
                && l1.body_dual.dims() == l2.body_dual.dims()
                && l1.body_dual.approx_eq(&l2.body_dual, MATCH_TOL)
                && r1.body_dual.dims() == r2.body_dual.dims()
                && r1.body_dual.approx_eq(&r2.body_dual, MATCH_TOL)
        }
        (SideCondition::Separability { .. }, SideCondition::Separability { .. }) => a.describe() == b.describe(),
        _ => false,
    }
}

fn gamma_subset(a: &[SideCondition], b: &[SideCondition]) -> bool {
    a.iter().all(|x| b.iter().any(|y| cond_eq(x, y)))
}

fn gamma_eq(a: &[SideCondition], b: &[SideCondition]) -> bool {
    gamma_subset(a, b) && gamma_subset(b, a)
}

fn fail(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

fn expect_close(a: &Matrix, b: &Matrix, what: &str) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(fail(format!("{what}: dimensions {:?} and {:?} differ", a.dims(), b.dims())));
    }
    let d = a.max_abs_diff(b);
    if d > MATCH_TOL {
        return Err(fail(format!("{what}: predicates differ by {d:.3e}")));
    }
    Ok(())
}

fn expect_premises(d: &Derivation, n: usize) -> Result<()> {
    if d.premises.len() != n {
        return Err(fail(format!("{} needs {n} premise(s), found {}", d.rule, d.premises.len())));
    }
    Ok(())
}

fn expect_same_programs(d: &Derivation, p: &Derivation) -> Result<()> {
    if !same_body(&p.left, &d.left.body) || !same_body(&p.right, &d.right.body) {
        return Err(fail("premise is about different programs"));
    }
    if p.left.input_dim() != d.left.input_dim() || p.right.input_dim() != d.right.input_dim() {
        return Err(fail("premise acts on different registers"));
    }
    Ok(())
}

fn loewner(a: &Matrix, b: &Matrix, desc: String) -> Result<Obligation> {
    if a.dims() != b.dims() {
        return Err(fail(format!("{desc}: dimensions differ")));
    }
    let gap = min_eigenvalue(&(b - a))?;
    Ok(Obligation::analytic(ObligationKind::Loewner, desc, (-gap).max(0.0)))
}

fn lossless(p: &Program, policy: Policy) -> Obligation {
    let description = format!("{} is lossless", pretty_body(p));
    if policy == Policy::AssumeLossless {
        return Obligation {
            kind: ObligationKind::Lossless,
            description,
            discharge: Discharge::UncheckedAssumption,
            passed: true,
            residual: 0.0,
            samples: None,
        };
    }
    match is_lossless(p) {
        Ok(r) => Obligation::analytic(ObligationKind::Lossless, description, r.trace_defect),
        Err(e) => Obligation {
            kind: ObligationKind::Lossless,
            description: format!("{description} ({e})"),
            discharge: Discharge::Analytic,
            passed: false,
            residual: f64::INFINITY,
            samples: None,
        },
    }
}

/// Branch statements and guard of a case or loop fragment.
fn control(p: &Program) -> Result<(MeasSpec, Vec<Stmt>)> {
    let (m, s) = guard_of(p).ok_or_else(|| fail("fragment is not a case or loop statement"))?;
    let parts = match s {
        Stmt::IfMeas { branches, .. } => branches.clone(),
        Stmt::WhileMeas { body, .. } => vec![(**body).clone()],
        _ => unreachable!("guard_of returns control statements"),
    };
    Ok((m, parts))
}

fn guard_syntax(p: &Program) -> Option<(crate::lang::Measurement, Vec<String>)> {
    match single(p)? {
        Stmt::IfMeas { meas, regs, .. } | Stmt::WhileMeas { meas, regs, .. } => Some((meas.clone(), regs.clone())),
        _ => None,
    }
}

fn sides_of(rule: Rule) -> (bool, bool) {
    match rule.sides() {
        Sides::Both => (true, true),
        Sides::Only(Side::Left) => (true, false),
        Sides::Only(Side::Right) => (false, true),
    }
}

/// Premise k must be about the given branch bodies (None keeps the
/// conclusion's program on that side).
fn expect_branch(d: &Derivation, p: &Derivation, l: Option<&Stmt>, r: Option<&Stmt>) -> Result<()> {
    let lb = l.unwrap_or(&d.left.body);
    let rb = r.unwrap_or(&d.right.body);
    if !same_body(&p.left, lb) || !same_body(&p.right, rb) {
        return Err(fail("premise is not about the matching branches"));
    }
    if !p.gamma.is_empty() {
        return Err(fail("branch premises must have an empty context"));
    }
    Ok(())
}

fn check_step(d: &Derivation, opts: &CheckOptions) -> Result<Vec<Obligation>> {
    use Rule::*;
    let rule = d.rule;
    if opts.projective && !(rule.is_projective() || rule.is_shared()) {
        return Err(fail(format!("{rule} is not a rule of the projective system")));
    }
    if !opts.projective && rule.is_projective() {
        return Err(fail(format!("{rule} belongs to the projective system")));
    }
    let (d1, d2) = (d.left.input_dim(), d.right.input_dim());
    let (o1, o2) = (d.left.output_dim(), d.right.output_dim());
    if d.pre.dims() != (d1 * d2, d1 * d2) {
        return Err(Error::dim(format!("precondition is {:?}, programs need {}", d.pre.dims(), d1 * d2)));
    }
    if d.post.dims() != (o1 * o2, o1 * o2) {
        return Err(Error::dim(format!("postcondition is {:?}, programs need {}", d.post.dims(), o1 * o2)));
    }
    ensure_predicate(&d.pre, "precondition")?;
    ensure_predicate(&d.post, "postcondition")?;
    if opts.projective && (!is_projector(&d.pre, 1e-8) || !is_projector(&d.post, 1e-8)) {
        return Err(fail("projective judgments need projector predicates"));
    }
    let mut obs = Vec::new();
    let (use_l, use_r) = sides_of(rule);
    match rule {
        Skip | Init | InitL | InitR | Ut | UtL | UtR | So | SoL | SoR => {
            expect_premises(d, 0)?;
            expect_close(&d.pre, &precondition_of(&d.instance(), &d.post)?, "precondition")?;
        }
        InitP | InitPL | InitPR | SoP | SoPL | SoPR => {
            expect_premises(d, 0)?;
            expect_close(&d.post, &postcondition_of(&d.instance(), &d.pre)?, "postcondition")?;
        }
        Sc | ScPlus => {
            expect_premises(d, 2)?;
            let (a, b) = (&d.premises[0], &d.premises[1]);
            let want_l = Stmt::seq(vec![a.left.body.clone(), b.left.body.clone()]);
            let want_r = Stmt::seq(vec![a.right.body.clone(), b.right.body.clone()]);
            if !same_body(&d.left, &want_l) || !same_body(&d.right, &want_r) {
                return Err(fail("conclusion is not the composition of the premises' programs"));
            }
            expect_close(&d.pre, &a.pre, "precondition of the first premise")?;
            expect_close(&d.post, &b.post, "postcondition of the second premise")?;
            expect_close(&a.post, &b.pre, "intermediate predicate")?;
            if !gamma_eq(&d.gamma, &a.gamma) {
                return Err(fail("the first premise must have the conclusion's context"));
            }
            if rule == Sc {
                if !gamma_eq(&a.gamma, &b.gamma) {
                    return Err(fail("(SC) needs equal contexts; use (SC+)"));
                }
            } else if !b.gamma.is_empty() {
                let desc = format!(
                    "{{{}}} entails {{{}}} across the first segment",
                    a.gamma.iter().map(SideCondition::describe).collect::<Vec<_>>().join(", "),
                    b.gamma.iter().map(SideCondition::describe).collect::<Vec<_>>().join(", ")
                );
                match check_couple_entailment(&a.gamma, &b.gamma, &a.left, &a.right, &opts.sampler) {
                    Ok(v) => obs.push(Obligation::sampled(ObligationKind::CoupleEntailment, desc, &v)),
                    Err(Error::Unsupported(m)) => obs.push(Obligation {
                        kind: ObligationKind::CoupleEntailment,
                        description: format!("{desc} ({m})"),
                        discharge: Discharge::UncheckedAssumption,
                        passed: false,
                        residual: f64::INFINITY,
                        samples: None,
                    }),
                    Err(e) => return Err(e),
                }
            }
        }
        If | IfW | IfL | IfR => {
            let pre = precondition_of(&d.instance(), &d.post)?;
            let br1 = if use_l { Some(control(&d.left)?.1) } else { None };
            let br2 = if use_r { Some(control(&d.right)?.1) } else { None };
            let slots: Vec<(Option<usize>, Option<usize>)> = match rule.sides() {
                Sides::Both => super::transform::if_pairs(
                    &d.instance(),
                    br1.as_ref().map_or(0, Vec::len),
                    br2.as_ref().map_or(0, Vec::len),
                )
                .into_iter()
                .map(|(m, n)| (Some(m), Some(n)))
                .collect(),
                Sides::Only(Side::Left) => (0..br1.as_ref().map_or(0, Vec::len)).map(|m| (Some(m), None)).collect(),
                Sides::Only(Side::Right) => (0..br2.as_ref().map_or(0, Vec::len)).map(|n| (None, Some(n))).collect(),
            };
            expect_premises(d, slots.len())?;
            for (p, (m, n)) in d.premises.iter().zip(&slots) {
                let l = m.and_then(|m| br1.as_ref().map(|b| &b[m]));
                let r = n.and_then(|n| br2.as_ref().map(|b| &b[n]));
                expect_branch(d, p, l, r)?;
                expect_close(&p.post, &d.post, "branch postcondition")?;
            }
            expect_close(&d.pre, &pre, "precondition")?;
            if matches!(rule, If | IfW) {
                for (side, brs) in [(&d.left, &br1), (&d.right, &br2)] {
                    for b in brs.iter().flatten() {
                        obs.push(lossless(&side.with_body(b.clone())?, opts.policy));
                    }
                }
            }
        }
        If1 | If1L | If1R | IfP | IfPL | IfPR => {
            let g1 = if use_l { Some(control(&d.left)?) } else { None };
            let g2 = if use_r { Some(control(&d.right)?) } else { None };
            let n = g1.as_ref().or(g2.as_ref()).map_or(0, |g| g.1.len());
            if let (Some(a), Some(b)) = (&g1, &g2) {
                if a.0.labels != b.0.labels {
                    return Err(fail("the two guards have different outcome sets"));
                }
            }
            expect_premises(d, n)?;
            for (k, p) in d.premises.iter().enumerate() {
                let l = g1.as_ref().map(|g| &g.1[k]);
                let r = g2.as_ref().map(|g| &g.1[k]);
                expect_branch(d, p, l, r)?;
                expect_close(&p.post, &d.post, "branch postcondition")?;
            }
            let m1 = g1.as_ref().map(|g| &g.0);
            let m2 = g2.as_ref().map(|g| &g.0);
            if rule == If1 {
                let want = SideCondition::MeasEq { left: m1.cloned().expect("two-sided"), right: m2.cloned().expect("two-sided") };
                if !d.gamma.iter().any(|g| cond_eq(g, &want)) {
                    return Err(fail(format!("context must contain {}", want.describe())));
                }
            }
            let bs: Vec<Matrix> = d.premises.iter().map(|p| p.pre.clone()).collect();
            obs.push(meas_obligation(m1, m2, (d1, d2), &d.pre, &bs, rule.is_projective(), &opts.sampler)?);
        }
        Lp | LpL | LpR => {
            expect_premises(d, 1)?;
            let p = &d.premises[0];
            let b1 = if use_l { Some(control(&d.left)?.1.remove(0)) } else { None };
            let b2 = if use_r { Some(control(&d.right)?.1.remove(0)) } else { None };
            expect_branch(d, p, b1.as_ref(), b2.as_ref())?;
            let inv = loop_invariant(&d.instance(), &d.post, &p.pre)?;
            expect_close(&p.post, &inv, "premise postcondition")?;
            expect_close(&d.pre, &inv, "precondition")?;
            if use_l {
                obs.push(lossless(&d.left, opts.policy));
            }
            if use_r {
                obs.push(lossless(&d.right, opts.policy));
            }
        }
        Lp1 | Lp1L | Lp1R | LpP | LpPL | LpPR => {
            expect_premises(d, 1)?;
            let p = &d.premises[0];
            let g1 = if use_l { Some(control(&d.left)?) } else { None };
            let g2 = if use_r { Some(control(&d.right)?) } else { None };
            expect_branch(d, p, g1.as_ref().map(|g| &g.1[0]), g2.as_ref().map(|g| &g.1[0]))?;
            if g1.as_ref().or(g2.as_ref()).map_or(0, |g| g.0.ops.len()) != 2 {
                return Err(fail("loop guards must be binary"));
            }
            expect_close(&p.post, &d.pre, "premise postcondition")?;
            if rule == Lp1 {
                let (ms1, r1) = guard_syntax(&d.left).expect("checked");
                let (ms2, r2) = guard_syntax(&d.right).expect("checked");
                let want = SideCondition::meas_loop_eq(&p.left, &ms1, &r1, &p.right, &ms2, &r2)?;
                if !d.gamma.iter().any(|g| cond_eq(g, &want)) {
                    return Err(fail(format!("context must contain {}", want.describe())));
                }
            }
            let m1 = g1.as_ref().map(|g| &g.0);
            let m2 = g2.as_ref().map(|g| &g.0);
            let bs = vec![d.post.clone(), p.pre.clone()];
            obs.push(meas_obligation(m1, m2, (d1, d2), &d.pre, &bs, rule.is_projective(), &opts.sampler)?);
            if matches!(rule, Lp1L | LpPL) {
                obs.push(lossless(&d.left, opts.policy));
            }
            if matches!(rule, Lp1R | LpPR) {
                obs.push(lossless(&d.right, opts.policy));
            }
        }
        Conseq => {
            expect_premises(d, 1)?;
            let p = &d.premises[0];
            expect_same_programs(d, p)?;
            if !gamma_subset(&p.gamma, &d.gamma) {
                return Err(fail("premise context is not contained in the conclusion's"));
            }
            obs.push(loewner(&d.pre, &p.pre, "A ⊑ A'".into())?);
            obs.push(loewner(&p.post, &d.post, "B' ⊑ B".into())?);
        }
        Weaken => {
            expect_premises(d, 1)?;
            let p = &d.premises[0];
            expect_same_programs(d, p)?;
            expect_close(&d.pre, &p.pre, "precondition")?;
            expect_close(&d.post, &p.post, "postcondition")?;
            if !gamma_subset(&p.gamma, &d.gamma) {
                return Err(fail("premise context is not contained in the conclusion's"));
            }
        }
        Case => {
            expect_premises(d, d.payload.probs.len())?;
            for p in &d.premises {
                expect_same_programs(d, p)?;
                expect_close(&p.post, &d.post, "case postcondition")?;
                if !gamma_eq(&p.gamma, &d.gamma) {
                    return Err(fail("case premises must share the conclusion's context"));
                }
            }
            expect_close(&d.pre, &precondition_of(&d.instance(), &d.post)?, "precondition")?;
        }
        Frame => check_frame(d)?,
    }
    Ok(obs)
}

fn meas_obligation(
    m1: Option<&MeasSpec>,
    m2: Option<&MeasSpec>,
    dims: (usize, usize),
    a: &Matrix,
    bs: &[Matrix],
    projective: bool,
    sampler: &Sampler,
) -> Result<Obligation> {
    let name = |m: Option<&MeasSpec>| m.map_or("I".to_string(), |m| m.name.clone());
    let desc = format!(
        "{}{} ≈ {} ⊨ A ⇒ {{B0..B{}}}",
        if projective { "⊨_P " } else { "" },
        name(m1),
        name(m2),
        bs.len().saturating_sub(1)
    );
    let v = if projective {
        check_projective_meas_judgment(m1, m2, dims, a, bs, sampler)?
    } else {
        check_meas_judgment_sampled(m1, m2, dims, a, bs, sampler)?
    };
    Ok(Obligation::sampled(ObligationKind::MeasurementJudgment, desc, &v))
}

fn check_frame(d: &Derivation) -> Result<()> {
    expect_premises(d, 1)?;
    let p = &d.premises[0];
    let f: &FrameSpec = d.payload.frame.as_ref().ok_or_else(|| fail("frame registers and C are needed"))?;
    if !p.gamma.is_empty() {
        return Err(fail("(Frame) is applied to a premise with an empty context"));
    }
    if !same_body(&p.left, &d.left.body) || !same_body(&p.right, &d.right.body) {
        return Err(fail("premise is about different programs"));
    }
    for (prog, regs) in [(&p.left, &f.left), (&p.right, &f.right)] {
        if regs.iter().any(|q| prog.dim_of(q).is_some()) {
            return Err(fail("frame registers must not be registers of the programs"));
        }
    }
    let v1 = frame_dim(&d.left, &f.left)?;
    let v2 = frame_dim(&d.right, &f.right)?;
    let (d1, d2) = (p.left.input_dim(), p.right.input_dim());
    let (o1, o2) = (p.left.output_dim(), p.right.output_dim());
    if d.left.input_dim() != d1 * v1 || d.right.input_dim() != d2 * v2 {
        return Err(fail("conclusion programs must extend the premise's by the frame registers only"));
    }
    ensure_predicate(&f.c, "frame predicate")?;
    expect_close(&d.pre, &frame_split(&p.pre, &f.c, d1, d2, v1, v2)?, "precondition A ⊗ C")?;
    expect_close(&d.post, &frame_split(&p.post, &f.c, o1, o2, v1, v2)?, "postcondition B ⊗ C")?;
    let tag = |v: &[String], t: u8| v.iter().map(|q| format!("{q}<{t}>")).collect::<Vec<_>>();
    let mut framed = tag(&f.left, 1);
    framed.extend(tag(&f.right, 2));
    let mut rest = tag(p.left.inputs(), 1);
    rest.extend(tag(p.right.inputs(), 2));
    let parts: Vec<Vec<String>> = [framed, rest].into_iter().filter(|v| !v.is_empty()).collect();
    let want = SideCondition::separability(&d.left, &d.right, &parts)?;
    if parts.len() > 1 && !d.gamma.iter().any(|g| cond_eq(g, &want)) {
        return Err(fail(format!("context must contain {}", want.describe())));
    }
    Ok(())
}

/// Checks every step of a derivation.
pub fn check_derivation(d: &Derivation, opts: &CheckOptions) -> DerivationReport {
    let mut steps = Vec::new();
    walk(d, opts, String::new(), &mut steps);
    let valid = steps.iter().all(|s| s.ok);
    DerivationReport { valid, steps }
}

fn walk(d: &Derivation, opts: &CheckOptions, path: String, out: &mut Vec<StepReport>) {
    let (ok, error, obligations) = match check_step(d, opts) {
        Ok(obs) => (obs.iter().all(|o| o.passed), None, obs),
        Err(e) => (false, Some(e.to_string()), vec![]),
    };
    out.push(StepReport { path: path.clone(), rule: d.rule, judgment: d.describe(), ok, error, obligations });
    for (k, p) in d.premises.iter().enumerate() {
        let sub = if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
        walk(p, opts, sub, out);
    }
}

impl fmt::Display for DerivationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            let mark = if s.ok { "ok  " } else { "FAIL" };
            let path = if s.path.is_empty() { "root".to_string() } else { s.path.clone() };
            writeln!(f, "{mark} {path:<8} {:<8} {}", s.rule.name(), s.judgment)?;
            if let Some(e) = &s.error {
                writeln!(f, "       error: {e}")?;
            }
            for o in &s.obligations {
                let m = if o.passed { "ok" } else { "FAILED" };
                writeln!(f, "       [{m}] {} (residual {:.2e})", o.description, o.residual)?;
            }
        }
        write!(f, "{}", if self.valid { "derivation valid" } else { "derivation invalid" })
    }
}
