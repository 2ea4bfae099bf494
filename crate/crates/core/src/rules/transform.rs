use crate::error::{Error, Result};
use crate::judgment::{MeasSpec, Side};
use crate::lang::{Program, Stmt};
use crate::linalg::{apply_kraus, apply_kraus_dual, is_quantum_predicate, permute, psd_part, support_projector, Matrix, Shape};
use crate::semantics::denote;

use super::rule::{Rule, Sides};

/// Supplied predicates and parameters of a rule application.
#[derive(Clone, Debug, Default)]
pub struct Payload {
    /// Bₘ (or Bₘₙ, in the order of `pairs`) for case rules.
    pub branch_pres: Vec<Matrix>,
    /// The set S of rule (IF); all pairs when absent.
    pub pairs: Option<Vec<(usize, usize)>>,
    /// B of (LP) and its one-sided forms.
    pub loop_pre: Option<Matrix>,
    /// The precondition, for rules that do not determine it.
    pub pre: Option<Matrix>,
    pub probs: Vec<f64>,
    pub case_pres: Vec<Matrix>,
    pub frame: Option<FrameSpec>,
}

/// Registers added by (Frame) and the predicate C on them. C acts on the
/// left registers followed by the right ones.
#[derive(Clone, Debug)]
pub struct FrameSpec {
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub c: Matrix,
}

/// A rule applied to a pair of program fragments.
#[derive(Clone, Debug)]
pub struct RuleInstance {
    pub rule: Rule,
    pub left: Program,
    pub right: Program,
    pub payload: Payload,
}

pub(crate) fn single(p: &Program) -> Option<&Stmt> {
    match &p.body {
        Stmt::Seq(v) if v.len() == 1 => Some(&v[0]),
        Stmt::Seq(v) if v.is_empty() => Some(&Stmt::Skip),
        s => Some(s),
    }
    .filter(|s| !matches!(s, Stmt::Seq(_)))
}

pub(crate) fn is_skip(p: &Program) -> bool {
    match &p.body {
        Stmt::Skip => true,
        Stmt::Seq(v) => v.iter().all(|s| matches!(s, Stmt::Skip)),
        _ => false,
    }
}

fn inapplicable(rule: Rule, msg: impl Into<String>) -> Error {
    Error::rule(rule.name(), msg)
}

fn stmt_fits(rule: Rule, s: &Stmt) -> bool {
    use Rule::*;
    match rule {
        Init | InitL | InitR | InitP | InitPL | InitPR => matches!(s, Stmt::Init(_)),
        Ut | UtL | UtR => matches!(s, Stmt::Unitary { .. }),
        So | SoL | SoR | SoP | SoPL | SoPR => matches!(s, Stmt::ApplySuper { .. } | Stmt::TraceOut(_)),
        Skip => matches!(s, Stmt::Skip),
        _ => false,
    }
}

/// Checks the fragment shapes of an atomic rule.
fn check_atomic(inst: &RuleInstance) -> Result<()> {
    let rule = inst.rule;
    let fits = |p: &Program| single(p).map(|s| stmt_fits(rule, s)).unwrap_or(false);
    let ok = match rule.sides() {
        Sides::Both => fits(&inst.left) && fits(&inst.right),
        Sides::Only(Side::Left) => fits(&inst.left) && is_skip(&inst.right),
        Sides::Only(Side::Right) => is_skip(&inst.left) && fits(&inst.right),
    };
    if ok {
        Ok(())
    } else {
        Err(inapplicable(rule, "fragments do not have the form the rule requires"))
    }
}

fn kraus_of(p: &Program) -> Result<Vec<Matrix>> {
    denote(p)?.kraus_ops()
}

fn pair_kraus(left: &Program, right: &Program) -> Result<Vec<Matrix>> {
    let k1 = kraus_of(left)?;
    let k2 = kraus_of(right)?;
    Ok(k1.iter().flat_map(|a| k2.iter().map(move |b| a.kron(b))).collect())
}

/// (⟦P₁⟧* ⊗ ⟦P₂⟧*)(A).
pub fn joint_dual(left: &Program, right: &Program, post: &Matrix) -> Result<Matrix> {
    check_dims(post, left.output_dim() * right.output_dim(), "postcondition")?;
    Ok(apply_kraus_dual(&pair_kraus(left, right)?, post)?.hermitian_part())
}

/// (⟦P₁⟧ ⊗ ⟦P₂⟧)(A).
pub fn joint_forward(left: &Program, right: &Program, pre: &Matrix) -> Result<Matrix> {
    check_dims(pre, left.input_dim() * right.input_dim(), "precondition")?;
    Ok(apply_kraus(&pair_kraus(left, right)?, pre)?.hermitian_part())
}

/// Projector onto the support of a positive operator.
pub fn proj(a: &Matrix) -> Result<Matrix> {
    support_projector(&psd_part(a)?, 1e-8)
}

fn check_dims(m: &Matrix, d: usize, what: &str) -> Result<()> {
    if m.dims() != (d, d) {
        return Err(Error::dim(format!("{what} is {:?}, expected {d}x{d}", m.dims())));
    }
    Ok(())
}

/// Measurement of a case or loop statement, embedded in the fragment's
/// input space.
pub(crate) fn guard_of(p: &Program) -> Option<(MeasSpec, &Stmt)> {
    let s = single(p)?;
    let (meas, regs) = match s {
        Stmt::IfMeas { meas, regs, .. } | Stmt::WhileMeas { meas, regs, .. } => (meas, regs),
        _ => return None,
    };
    MeasSpec::on_inputs(p, meas, regs).ok().map(|m| (m, s))
}

/// Operators Mₘ ⊗ I or I ⊗ Mₘ on the joint space.
pub(crate) fn lift_ops(m: &MeasSpec, side: Side, other_dim: usize) -> Vec<Matrix> {
    let id = Matrix::identity(other_dim);
    m.ops
        .iter()
        .map(|k| match side {
            Side::Left => k.kron(&id),
            Side::Right => id.kron(k),
        })
        .collect()
}

/// Joint measurement operators for the case and loop rules: one list per
/// outcome pair (two-sided) or per outcome (one-sided).
pub(crate) fn joint_guard_ops(inst: &RuleInstance) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
    let rule = inst.rule;
    let g1 = guard_of(&inst.left);
    let g2 = guard_of(&inst.right);
    let (d1, d2) = (inst.left.input_dim(), inst.right.input_dim());
    match rule.sides() {
        Sides::Both => {
            let (m1, _) = g1.ok_or_else(|| inapplicable(rule, "left fragment is not a case or loop statement"))?;
            let (m2, _) = g2.ok_or_else(|| inapplicable(rule, "right fragment is not a case or loop statement"))?;
            Ok((lift_ops(&m1, Side::Left, d2), lift_ops(&m2, Side::Right, d1)))
        }
        Sides::Only(Side::Left) => {
            let (m1, _) = g1.ok_or_else(|| inapplicable(rule, "left fragment is not a case or loop statement"))?;
            Ok((lift_ops(&m1, Side::Left, d2), vec![]))
        }
        Sides::Only(Side::Right) => {
            let (m2, _) = g2.ok_or_else(|| inapplicable(rule, "right fragment is not a case or loop statement"))?;
            Ok((vec![], lift_ops(&m2, Side::Right, d1)))
        }
    }
}

fn is_loop(p: &Program) -> bool {
    matches!(single(p), Some(Stmt::WhileMeas { .. }))
}

fn is_case(p: &Program) -> bool {
    matches!(single(p), Some(Stmt::IfMeas { .. }))
}

fn check_control(inst: &RuleInstance, want_loop: bool) -> Result<()> {
    let test = |p: &Program| if want_loop { is_loop(p) } else { is_case(p) };
    let ok = match inst.rule.sides() {
        Sides::Both => test(&inst.left) && test(&inst.right),
        Sides::Only(Side::Left) => test(&inst.left),
        Sides::Only(Side::Right) => test(&inst.right),
    };
    let ok = ok
        && match (want_loop, inst.rule.sides()) {
            (true, Sides::Only(Side::Left)) => is_skip(&inst.right),
            (true, Sides::Only(Side::Right)) => is_skip(&inst.left),
            _ => true,
        };
    if ok {
        Ok(())
    } else {
        Err(inapplicable(inst.rule, "fragments do not have the form the rule requires"))
    }
}

/// Σ over selected outcomes of K† Bₖ K.
fn case_sum(ops: &[Matrix], bs: &[Matrix]) -> Matrix {
    let mut acc = Matrix::zeros(ops[0].cols(), ops[0].cols());
    for (k, b) in ops.iter().zip(bs) {
        acc = &acc + &k.sandwich_dual(b);
    }
    acc.hermitian_part()
}

/// Outcome pairs of rule (IF).
pub(crate) fn if_pairs(inst: &RuleInstance, n1: usize, n2: usize) -> Vec<(usize, usize)> {
    match (&inst.payload.pairs, inst.rule) {
        (_, Rule::IfW) => (0..n1.min(n2)).map(|m| (m, m)).collect(),
        (Some(p), _) => p.clone(),
        (None, _) => (0..n1).flat_map(|m| (0..n2).map(move |n| (m, n))).collect(),
    }
}

/// The loop predicate M₀†AM₀ + M₁†BM₁ (two- or one-sided).
pub(crate) fn loop_invariant(inst: &RuleInstance, a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let (l, r) = joint_guard_ops(inst)?;
    let ops: Vec<Matrix> = match inst.rule.sides() {
        Sides::Both => vec![l[0].matmul(&r[0]), l[1].matmul(&r[1])],
        Sides::Only(Side::Left) => l,
        Sides::Only(Side::Right) => r,
    };
    if ops.len() != 2 {
        return Err(inapplicable(inst.rule, "loop guards must be binary"));
    }
    Ok((&ops[0].sandwich_dual(a) + &ops[1].sandwich_dual(b)).hermitian_part())
}

/// The precondition a backward rule derives from `post`.
pub fn precondition_of(inst: &RuleInstance, post: &Matrix) -> Result<Matrix> {
    use Rule::*;
    let rule = inst.rule;
    let need = |m: &Option<Matrix>, what: &str| m.clone().ok_or_else(|| inapplicable(rule, format!("{what} must be supplied")));
    let out = match rule {
        Skip => {
            check_atomic(inst)?;
            check_dims(post, inst.left.output_dim() * inst.right.output_dim(), "postcondition")?;
            post.clone()
        }
        Init | InitL | InitR | Ut | UtL | UtR | So | SoL | SoR => {
            check_atomic(inst)?;
            joint_dual(&inst.left, &inst.right, post)?
        }
        If | IfW | IfL | IfR => {
            check_control(inst, false)?;
            let (l, r) = joint_guard_ops(inst)?;
            let (ops, count): (Vec<Matrix>, usize) = match rule.sides() {
                Sides::Both => {
                    let pairs = if_pairs(inst, l.len(), r.len());
                    if pairs.iter().any(|&(m, n)| m >= l.len() || n >= r.len()) {
                        return Err(inapplicable(rule, "outcome pair out of range"));
                    }
                    (pairs.iter().map(|&(m, n)| l[m].matmul(&r[n])).collect(), pairs.len())
                }
                Sides::Only(Side::Left) => (l.clone(), l.len()),
                Sides::Only(Side::Right) => (r.clone(), r.len()),
            };
            if inst.payload.branch_pres.len() != count {
                return Err(inapplicable(rule, format!("{count} branch predicates are needed")));
            }
            case_sum(&ops, &inst.payload.branch_pres)
        }
        Lp | LpL | LpR => {
            check_control(inst, true)?;
            let b = need(&inst.payload.loop_pre, "the loop predicate B")?;
            loop_invariant(inst, post, &b)?
        }
        If1 | If1L | If1R | IfP | IfPL | IfPR => {
            check_control(inst, false)?;
            need(&inst.payload.pre, "the precondition A")?
        }
        Lp1 | Lp1L | Lp1R | LpP | LpPL | LpPR => {
            check_control(inst, true)?;
            need(&inst.payload.pre, "the precondition A")?
        }
        Conseq | Weaken => need(&inst.payload.pre, "the precondition")?,
        Case => {
            let p = &inst.payload.probs;
            if p.len() != inst.payload.case_pres.len() || p.is_empty() {
                return Err(inapplicable(rule, "one probability per case is needed"));
            }
            if p.iter().any(|x| *x < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
                return Err(inapplicable(rule, "case weights are not a probability distribution"));
            }
            let mut acc = Matrix::zeros(inst.payload.case_pres[0].rows(), inst.payload.case_pres[0].rows());
            for (w, a) in p.iter().zip(&inst.payload.case_pres) {
                acc = &acc + &a.scale_re(*w);
            }
            acc
        }
        Frame => {
            let f = inst.payload.frame.as_ref().ok_or_else(|| inapplicable(rule, "frame registers and C are needed"))?;
            let a = need(&inst.payload.pre, "the premise precondition")?;
            let v1 = frame_dim(&inst.left, &f.left)?;
            let v2 = frame_dim(&inst.right, &f.right)?;
            frame_split(&a, &f.c, inst.left.input_dim() / v1, inst.right.input_dim() / v2, v1, v2)?
        }
        Sc | ScPlus => return Err(inapplicable(rule, "sequential composition is checked on derivations")),
        InitP | InitPL | InitPR | SoP | SoPL | SoPR => {
            return Err(inapplicable(rule, "this rule computes its postcondition; use postcondition_of"))
        }
    };
    Ok(out)
}

/// The postcondition of a forward projective rule applied to `pre`.
pub fn postcondition_of(inst: &RuleInstance, pre: &Matrix) -> Result<Matrix> {
    if !inst.rule.is_forward() {
        return Err(inapplicable(inst.rule, "not a forward rule"));
    }
    check_atomic(inst)?;
    proj(&joint_forward(&inst.left, &inst.right, pre)?)
}

/// A ⊗ C with C on (left frame ⊗ right frame), reordered so that each
/// program's frame registers follow its own registers.
pub fn frame_split(a: &Matrix, c: &Matrix, d1: usize, d2: usize, v1: usize, v2: usize) -> Result<Matrix> {
    if a.rows() != d1 * d2 || c.rows() != v1 * v2 {
        return Err(Error::dim("frame predicate dimensions do not match"));
    }
    let shape = Shape::new(vec![d1, d2, v1, v2])?;
    permute(&a.kron(c), &shape, &[0, 2, 1, 3])
}

/// Dimension of the frame registers, which must be inputs at the end of
/// the program's table.
pub(crate) fn frame_dim(p: &Program, regs: &[String]) -> Result<usize> {
    let ins = p.inputs();
    if regs.len() > ins.len() || ins[ins.len() - regs.len()..] != *regs {
        return Err(Error::rule("Frame", "frame registers must come last in the register table"));
    }
    Ok(regs.iter().map(|q| p.dim_of(q).unwrap_or(1)).product())
}

/// Checks 0 ⊑ A ⊑ I.
pub fn ensure_predicate(a: &Matrix, what: &str) -> Result<()> {
    if !is_quantum_predicate(a, 1e-8)? {
        return Err(Error::Invalid(format!("{what} is not a quantum predicate")));
    }
    Ok(())
}
