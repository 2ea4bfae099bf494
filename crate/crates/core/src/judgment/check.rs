use serde::Serialize;

use crate::coupling::{lifting_exists, max_coupling_value, CouplingProblem};
use crate::error::{Error, Result};
use crate::lang::Program;
use crate::linalg::{is_projector, is_quantum_predicate, support_basis, Matrix};
use crate::sdp::{self, hermitian_basis, Constraint, Sdp, SdpOptions, SdpStatus};
use crate::semantics::{denote, SemanticFn};

use super::conditions::{marginals, meas_eq_defect, satisfies, MeasSpec, SideCondition, PROB_TOL};
use super::sample::{sample_input, Sampler};

/// A margin below this counts as a violation.
pub const FALSIFY_TOL: f64 = 1e-5;
/// Slack for measurement judgments.
pub const JUDGMENT_SLACK: f64 = 1e-6;
const OUTPUT_TRACE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Falsified,
    Passed,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Passed => 0,
            Status::Falsified => 1,
            Status::Inconclusive => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub counterexample: Option<Matrix>,
    pub samples_used: usize,
    pub worst_margin: f64,
    /// Always false: a pass covers only the sampled inputs.
    pub exhaustive: bool,
    /// Some inputs were only approximately inside the constrained set.
    pub approximate: bool,
    pub notes: Vec<String>,
}

impl Verdict {
    fn empty() -> Verdict {
        Verdict {
            status: Status::Passed,
            counterexample: None,
            samples_used: 0,
            worst_margin: f64::INFINITY,
            exhaustive: false,
            approximate: false,
            notes: vec![],
        }
    }

    fn inconclusive(note: impl Into<String>) -> Verdict {
        Verdict { status: Status::Inconclusive, worst_margin: 0.0, notes: vec![note.into()], ..Verdict::empty() }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Passed
    }

    fn finish(mut self) -> Verdict {
        if self.samples_used == 0 && self.status == Status::Passed {
            self.notes.push("no inputs were sampled; the check is vacuous".into());
        }
        if self.worst_margin == f64::INFINITY {
            self.worst_margin = 0.0;
        } else if self.worst_margin == f64::NEG_INFINITY {
            self.worst_margin = -1.0;
        }
        self
    }
}

/// Γ ⊢ P₁ ∼ P₂ : A ⇒ B.
#[derive(Clone, Debug)]
pub struct Judgment {
    pub gamma: Vec<SideCondition>,
    pub p1: Program,
    pub p2: Program,
    pub pre: Matrix,
    pub post: Matrix,
}

impl Judgment {
    pub fn new(p1: Program, p2: Program, pre: Matrix, post: Matrix) -> Judgment {
        Judgment { gamma: vec![], p1, p2, pre, post }
    }

    pub fn with_gamma(mut self, gamma: Vec<SideCondition>) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let din = self.p1.input_dim() * self.p2.input_dim();
        let dout = self.p1.output_dim() * self.p2.output_dim();
        if self.pre.dims() != (din, din) {
            return Err(Error::dim(format!("precondition {:?} for input space of dimension {din}", self.pre.dims())));
        }
        if self.post.dims() != (dout, dout) {
            return Err(Error::dim(format!("postcondition {:?} for output space of dimension {dout}", self.post.dims())));
        }
        for (m, what) in [(&self.pre, "precondition"), (&self.post, "postcondition")] {
            if !is_quantum_predicate(m, 1e-8)? {
                return Err(Error::Invalid(format!("{what} is not a quantum predicate")));
            }
        }
        for g in &self.gamma {
            let (a, b) = g.joint_dims();
            if a * b != din {
                return Err(Error::dim(format!("side condition {} does not act on the input space", g.describe())));
            }
        }
        Ok(())
    }
}

/// Semantics of both programs, computed once.
pub struct Prepared {
    pub e1: SemanticFn,
    pub e2: SemanticFn,
}

impl Prepared {
    pub fn new(p1: &Program, p2: &Program) -> Result<Prepared> {
        Ok(Prepared { e1: denote(p1)?, e2: denote(p2)? })
    }

    pub fn outputs(&self, rho: &Matrix) -> Result<(Matrix, Matrix)> {
        let (r1, r2) = marginals(rho, self.e1.d_in(), self.e2.d_in())?;
        Ok((self.e1.apply(&r1)?, self.e2.apply(&r2)?))
    }

    /// max over couplings σ of tr(Bσ) + tr ρ − tr σ − tr(Aρ). None when the
    /// output traces differ, so that no coupling exists.
    pub fn margin(&self, pre: &Matrix, post: &Matrix, rho: &Matrix) -> Result<Option<f64>> {
        let (o1, o2) = self.outputs(rho)?;
        let (t1, t2) = (o1.trace().re, o2.trace().re);
        if (t1 - t2).abs() > OUTPUT_TRACE_TOL {
            return Ok(None);
        }
        let o2 = if t2.abs() > 1e-14 { o2.scale_re(t1 / t2) } else { o2 };
        let sol = max_coupling_value(&CouplingProblem::new(o1, o2, post.clone()))?;
        if !sol.is_feasible() {
            return Err(Error::Numerical(format!("coupling solver returned {:?}", sol.status)));
        }
        Ok(Some(sol.value + rho.trace().re - t1 - pre.expect(rho)))
    }
}

fn inputs<'a>(
    sampler: &'a Sampler,
    d1: usize,
    d2: usize,
    gamma: &'a [SideCondition],
) -> impl Iterator<Item = Option<(Matrix, bool)>> + 'a {
    let battery = sampler.battery_states(d1, d2).into_iter().filter_map(move |s| {
        let ok = gamma.iter().all(|g| satisfies(g, &s).unwrap_or(false));
        ok.then_some(Some((s, false)))
    });
    let random = (0..sampler.count).map(move |k| sample_input(sampler, k, d1, d2, gamma));
    battery.chain(random)
}

/// Sampled falsification of Γ ⊨ P₁ ∼ P₂ : A ⇒ B.
pub fn check_judgment(j: &Judgment, sampler: &Sampler) -> Result<Verdict> {
    j.validate()?;
    let prep = match Prepared::new(&j.p1, &j.p2) {
        Ok(p) => p,
        Err(Error::Divergence(m)) => return Ok(Verdict::inconclusive(format!("loop semantics diverged: {m}"))),
        Err(e) => return Err(e),
    };
    check_prepared(j, &prep, sampler)
}

pub fn check_prepared(j: &Judgment, prep: &Prepared, sampler: &Sampler) -> Result<Verdict> {
    let (d1, d2) = (j.p1.input_dim(), j.p2.input_dim());
    let mut v = Verdict::empty();
    let mut failures = 0usize;
    for item in inputs(sampler, d1, d2, &j.gamma) {
        let (rho, approx) = match item {
            Some(x) => x,
            None => {
                failures += 1;
                continue;
            }
        };
        v.approximate |= approx;
        let m = match prep.margin(&j.pre, &j.post, &rho) {
            Ok(m) => m,
            Err(Error::Numerical(_)) => {
                failures += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        v.samples_used += 1;
        match m {
            None => {
                v.status = Status::Falsified;
                v.counterexample = Some(rho);
                v.worst_margin = f64::NEG_INFINITY;
                v.notes.push("output traces differ, so no coupling exists".into());
                return Ok(v.finish());
            }
            Some(m) => {
                v.worst_margin = v.worst_margin.min(m);
                if m < -FALSIFY_TOL {
                    v.status = Status::Falsified;
                    v.counterexample = Some(rho);
                    return Ok(v.finish());
                }
            }
        }
    }
    if failures > 0 {
        v.notes.push(format!("{failures} inputs could not be sampled or solved"));
        if v.samples_used == 0 {
            v.status = Status::Inconclusive;
        }
    }
    if v.approximate {
        v.notes.push("side conditions mix measurement and separability constraints or use a PPT relaxation".into());
    }
    Ok(v.finish())
}

/// Random pure states supported inside the projector `a`, after the
/// basis vectors of its range.
fn states_in_support(a: &Matrix, sampler: &Sampler) -> Result<Vec<Matrix>> {
    let basis = support_basis(a, 1e-8)?;
    let r = basis.cols();
    if r == 0 {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    if sampler.battery {
        for k in 0..r {
            out.push(Matrix::projector(&basis.column(k)));
        }
        out.push(a.scale_re(1.0 / r as f64));
    }
    for k in 0..sampler.count {
        let mut rng = sampler.rng(k);
        let c = crate::linalg::random::random_pure(&mut rng, r);
        let v = basis.matmul(&Matrix::column_vector(&c));
        out.push(Matrix::projector(v.data()));
    }
    Ok(out)
}

/// Sampled falsification of ⊨_P P₁ ∼ P₂ : A ⇒ B for projectors A, B.
pub fn check_projective_judgment(p1: &Program, p2: &Program, a: &Matrix, b: &Matrix, sampler: &Sampler) -> Result<Verdict> {
    if !is_projector(a, 1e-8) || !is_projector(b, 1e-8) {
        return Err(Error::Invalid("projective judgments need projector pre- and postconditions".into()));
    }
    let prep = match Prepared::new(p1, p2) {
        Ok(p) => p,
        Err(Error::Divergence(m)) => return Ok(Verdict::inconclusive(format!("loop semantics diverged: {m}"))),
        Err(e) => return Err(e),
    };
    let din = prep.e1.d_in() * prep.e2.d_in();
    let dout = prep.e1.d_out() * prep.e2.d_out();
    if a.dims() != (din, din) || b.dims() != (dout, dout) {
        return Err(Error::dim("projectors do not match the programs' spaces"));
    }
    let mut v = Verdict::empty();
    for rho in states_in_support(a, sampler)? {
        let (o1, o2) = prep.outputs(&rho)?;
        let sol = lifting_exists(&o1, &o2, b)?;
        v.samples_used += 1;
        let m = if sol.value.is_finite() { sol.value - o1.trace().re } else { f64::NEG_INFINITY };
        v.worst_margin = v.worst_margin.min(m);
        if !sol.is_feasible() && m < -FALSIFY_TOL {
            v.status = Status::Falsified;
            v.counterexample = Some(rho);
            return Ok(v.finish());
        }
    }
    Ok(v.finish())
}

/// Γ ⊨^(P₁,P₂) Δ, for Δ made of measurement conditions on the output spaces.
pub fn check_couple_entailment(
    gamma: &[SideCondition],
    delta: &[SideCondition],
    p1: &Program,
    p2: &Program,
    sampler: &Sampler,
) -> Result<Verdict> {
    if delta.iter().any(|d| !d.is_measurement()) {
        return Err(Error::Unsupported(
            "couple-entailment of separability conditions quantifies over all couplings".into(),
        ));
    }
    let prep = Prepared::new(p1, p2)?;
    let (d1, d2) = (p1.input_dim(), p2.input_dim());
    let mut v = Verdict::empty();
    if delta.is_empty() {
        return Ok(v.finish());
    }
    for item in inputs(sampler, d1, d2, gamma) {
        let Some((rho, approx)) = item else { continue };
        v.approximate |= approx;
        let (o1, o2) = prep.outputs(&rho)?;
        v.samples_used += 1;
        let (t1, t2) = (o1.trace().re, o2.trace().re);
        if (t1 - t2).abs() > OUTPUT_TRACE_TOL {
            // No coupling exists, so Δ holds vacuously.
            continue;
        }
        // Measurement conditions only see the marginals, so any coupling will do.
        let sigma = if t1.abs() < 1e-14 { o1.kron(&o2) } else { o1.kron(&o2).scale_re(1.0 / t1) };
        let mut worst: f64 = 0.0;
        for d in delta {
            let defect = match d {
                SideCondition::MeasEq { left, right } => meas_eq_defect(left, right, &sigma)?,
                SideCondition::MeasLoopEq { left, right } => {
                    let n = super::conditions::loop_bound(left.guard.dim(), right.guard.dim());
                    super::conditions::loop_exit_profile(left, right, &sigma, n)?
                        .iter()
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                }
                SideCondition::Separability { .. } => unreachable!("rejected above"),
            };
            worst = worst.max(defect);
        }
        v.worst_margin = v.worst_margin.min(-worst);
        if worst > PROB_TOL.max(FALSIFY_TOL * 1e-2) {
            v.status = Status::Falsified;
            v.counterexample = Some(rho);
            return Ok(v.finish());
        }
    }
    Ok(v.finish())
}

/// Which side of a one-sided measurement judgment carries the measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasJudgmentReport {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub witnesses: Vec<Matrix>,
}

/// M₁ ≈ M₂ ⊨ A ⇒ {Bₘ} at the input ρ. Errors with Precondition when ρ does not
/// satisfy M₁ ≈ M₂.
pub fn check_meas_judgment(
    m1: &MeasSpec,
    m2: &MeasSpec,
    a: &Matrix,
    bs: &[Matrix],
    rho: &Matrix,
) -> Result<MeasJudgmentReport> {
    if m1.ops.len() != bs.len() || m2.ops.len() != bs.len() {
        return Err(Error::Invalid("one postcondition per outcome is required".into()));
    }
    let defect = meas_eq_defect(m1, m2, rho)?;
    if defect > PROB_TOL {
        return Err(Error::Precondition(format!("input violates {} ≈ {} by {defect:.2e}", m1.name, m2.name)));
    }
    let (r1, r2) = marginals(rho, m1.dim(), m2.dim())?;
    let mut rhs = 0.0;
    let mut witnesses = Vec::new();
    for ((k1, k2), b) in m1.ops.iter().zip(&m2.ops).zip(bs) {
        let s1 = k1.sandwich(&r1);
        let mut s2 = k2.sandwich(&r2);
        let (t1, t2) = (s1.trace().re, s2.trace().re);
        if t2.abs() > 1e-14 {
            s2 = s2.scale_re(t1 / t2);
        }
        let sol = max_coupling_value(&CouplingProblem::new(s1, s2, b.clone()))?;
        if !sol.is_feasible() {
            return Err(Error::Numerical(format!("branch coupling returned {:?}", sol.status)));
        }
        rhs += sol.value;
        witnesses.push(sol.witness);
    }
    let lhs = a.expect(rho);
    Ok(MeasJudgmentReport { holds: lhs <= rhs + JUDGMENT_SLACK, lhs, rhs, witnesses })
}

/// Best Σₘ tr(Bₘσₘ) over σₘ coupling ⟨parts[m], ρ₂ₘ⟩ with Σₘ ρ₂ₘ = other,
/// with the roles of the factors swapped when `side` is Right.
pub fn one_sided_max(parts: &[Matrix], other: &Matrix, bs: &[Matrix], side: Side) -> Result<(f64, Vec<Matrix>)> {
    let dm = parts.first().map(Matrix::rows).ok_or_else(|| Error::Invalid("no outcomes".into()))?;
    let dn = other.rows();
    let vo = support_basis(other, 1e-9)?;
    let ro = vo.cols();
    let mut blocks = Vec::new();
    let mut maps = Vec::new();
    for p in parts {
        let vp = support_basis(p, 1e-9)?;
        let v = match side {
            Side::Left => vp.kron(&vo),
            Side::Right => vo.kron(&vp),
        };
        blocks.push(v.cols());
        maps.push((vp, v));
    }
    let live: Vec<usize> = (0..parts.len()).filter(|&m| blocks[m] > 0).collect();
    let mut constraints = Vec::new();
    let lift = |local: &Matrix, other_id: usize, side: Side| match side {
        Side::Left => local.kron(&Matrix::identity(other_id)),
        Side::Right => Matrix::identity(other_id).kron(local),
    };
    for (idx, &m) in live.iter().enumerate() {
        let (vp, v) = &maps[m];
        for e in hermitian_basis(vp.cols()) {
            let full = vp.sandwich(&e);
            let mut mats = vec![None; live.len()];
            mats[idx] = Some(v.sandwich_dual(&lift(&full, dn, side)).hermitian_part());
            constraints.push(Constraint { mats, rhs: full.expect(&parts[m]) });
        }
    }
    let other_side = match side {
        Side::Left => Side::Right,
        Side::Right => Side::Left,
    };
    for f in hermitian_basis(ro) {
        let full = vo.sandwich(&f);
        let mats = live
            .iter()
            .map(|&m| Some(maps[m].1.sandwich_dual(&lift(&full, dm, other_side)).hermitian_part()))
            .collect();
        constraints.push(Constraint { mats, rhs: full.expect(other) });
    }
    if live.is_empty() {
        return Ok((0.0, parts.iter().map(|p| Matrix::zeros(p.rows() * dn, p.rows() * dn)).collect()));
    }
    let objective = live.iter().map(|&m| Some(maps[m].1.sandwich_dual(&bs[m]).hermitian_part())).collect();
    let problem = Sdp { blocks: live.iter().map(|&m| blocks[m]).collect(), objective, constraints };
    let sol = sdp::solve(&problem, &SdpOptions::default())?;
    if matches!(sol.status, SdpStatus::Infeasible | SdpStatus::NumericalFailure) {
        return Err(Error::Numerical(format!("one-sided measurement program returned {:?}", sol.status)));
    }
    let mut witnesses: Vec<Matrix> = parts.iter().map(|p| Matrix::zeros(p.rows() * dn, p.rows() * dn)).collect();
    let mut value = 0.0;
    for (idx, &m) in live.iter().enumerate() {
        let w = maps[m].1.sandwich(&sol.x[idx]).hermitian_part();
        value += bs[m].expect(&w);
        witnesses[m] = w;
    }
    Ok((value, witnesses))
}

/// M₁ ≈ I₂ ⊨ A ⇒ {Bₘ} (side Left) or I₁ ≈ M₂ ⊨ A ⇒ {Bₘ} (side Right) at ρ.
/// `d_other` is the dimension of the unmeasured program's space.
pub fn check_meas_judgment_one_sided(
    m: &MeasSpec,
    side: Side,
    d_other: usize,
    a: &Matrix,
    bs: &[Matrix],
    rho: &Matrix,
) -> Result<MeasJudgmentReport> {
    if m.ops.len() != bs.len() {
        return Err(Error::Invalid("one postcondition per outcome is required".into()));
    }
    let (r1, r2) = match side {
        Side::Left => marginals(rho, m.dim(), d_other)?,
        Side::Right => marginals(rho, d_other, m.dim())?,
    };
    let (measured, other) = match side {
        Side::Left => (r1, r2),
        Side::Right => (r2, r1),
    };
    let parts: Vec<Matrix> = m.post_states(&measured);
    let (rhs, witnesses) = one_sided_max(&parts, &other, bs, side)?;
    let lhs = a.expect(rho);
    Ok(MeasJudgmentReport { holds: lhs <= rhs + JUDGMENT_SLACK, lhs, rhs, witnesses })
}

/// Sampled check of M₁ ≈ M₂ ⊨ A ⇒ {Bₘ} (or a one-sided form when one
/// measurement is None) over inputs satisfying the measurement condition.
pub fn check_meas_judgment_sampled(
    m1: Option<&MeasSpec>,
    m2: Option<&MeasSpec>,
    dims: (usize, usize),
    a: &Matrix,
    bs: &[Matrix],
    sampler: &Sampler,
) -> Result<Verdict> {
    let (d1, d2) = dims;
    let gamma = match (m1, m2) {
        (Some(x), Some(y)) => vec![SideCondition::MeasEq { left: x.clone(), right: y.clone() }],
        _ => vec![],
    };
    let mut v = Verdict::empty();
    for item in inputs(sampler, d1, d2, &gamma) {
        let Some((rho, _)) = item else { continue };
        let rep = match (m1, m2) {
            (Some(x), Some(y)) => check_meas_judgment(x, y, a, bs, &rho),
            (Some(x), None) => check_meas_judgment_one_sided(x, Side::Left, d2, a, bs, &rho),
            (None, Some(y)) => check_meas_judgment_one_sided(y, Side::Right, d1, a, bs, &rho),
            (None, None) => return Err(Error::Invalid("a measurement judgment needs a measurement".into())),
        };
        let rep = match rep {
            Ok(r) => r,
            Err(Error::Numerical(_)) | Err(Error::Precondition(_)) => continue,
            Err(e) => return Err(e),
        };
        v.samples_used += 1;
        let margin = rep.rhs - rep.lhs;
        v.worst_margin = v.worst_margin.min(margin);
        if margin < -FALSIFY_TOL {
            v.status = Status::Falsified;
            v.counterexample = Some(rho);
            return Ok(v.finish());
        }
    }
    if v.samples_used == 0 {
        v.status = Status::Inconclusive;
    }
    Ok(v.finish())
}

/// Sampled check of ⊨_P M₁ ≈ M₂ : A ⇒ {Bₘ}, or its one-sided form.
pub fn check_projective_meas_judgment(
    m1: Option<&MeasSpec>,
    m2: Option<&MeasSpec>,
    dims: (usize, usize),
    a: &Matrix,
    bs: &[Matrix],
    sampler: &Sampler,
) -> Result<Verdict> {
    let (d1, d2) = dims;
    let mut v = Verdict::empty();
    for rho in states_in_support(a, sampler)? {
        let (r1, r2) = marginals(&rho, d1, d2)?;
        let tr = r1.trace().re;
        let value = match (m1, m2) {
            (Some(x), Some(y)) => {
                let mut total = 0.0;
                let mut ok = true;
                for ((k1, k2), b) in x.ops.iter().zip(&y.ops).zip(bs) {
                    let s1 = k1.sandwich(&r1);
                    let s2 = k2.sandwich(&r2);
                    let sol = lifting_exists(&s1, &s2, b)?;
                    if sol.value.is_finite() {
                        total += sol.value;
                    } else {
                        ok = false;
                    }
                }
                if ok {
                    total
                } else {
                    f64::NEG_INFINITY
                }
            }
            (Some(x), None) => one_sided_max(&x.post_states(&r1), &r2, bs, Side::Left)?.0,
            (None, Some(y)) => one_sided_max(&y.post_states(&r2), &r1, bs, Side::Right)?.0,
            (None, None) => return Err(Error::Invalid("a measurement judgment needs a measurement".into())),
        };
        v.samples_used += 1;
        let margin = value - tr;
        v.worst_margin = v.worst_margin.min(margin);
        if margin < -FALSIFY_TOL {
            v.status = Status::Falsified;
            v.counterexample = Some(rho);
            return Ok(v.finish());
        }
    }
    Ok(v.finish())
}
