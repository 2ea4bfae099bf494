//! Proof outlines in JSON.
//!
//! ```json
//! {
//!   "left": "var q : 2; q := |0>; q := H[q]",
//!   "right": "var q : 2; q := |0>; q := H[q]",
//!   "predicates": { "E": "sym" },
//!   "post": "E",
//!   "derivation": { "seq": [
//!     { "rule": "Init", "left": "q := |0>", "right": "q := |0>", "post": "E" },
//!     { "rule": "UT", "left": "q := H[q]", "right": "q := H[q]", "post": "E" }
//!   ] }
//! }
//! ```
//!
//! Predicates are matrices, names (entries of `predicates` or one of
//! `identity`, `zero`, `sym`, `swap`, `basis_eq`, `max_entangled`) or
//! combinations `{"scale": x, "of": p}`, `{"sum": [p, ...]}` and
//! `{"conj": {"left": ["H"], "right": [], "of": p}}` for (U₁⊗U₂) p (U₁⊗U₂)†.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::judgment::SideCondition;
use crate::lang::builtins;
use crate::lang::{Program, Scope};
use crate::linalg::{basis_eq_projector, max_entangled_projector, swap_operator, sym_projector, Matrix};

use super::derivation::{check_derivation, CheckOptions, Derivation, DerivationReport, MATCH_TOL};
use super::rule::Rule;
use super::transform::{precondition_of, FrameSpec, Payload};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredRef {
    Name(String),
    Matrix(Matrix),
    Scale { scale: f64, of: Box<PredRef> },
    Sum { sum: Vec<PredRef> },
    Conj { conj: ConjSpec },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConjSpec {
    #[serde(default)]
    pub left: Vec<String>,
    #[serde(default)]
    pub right: Vec<String>,
    pub of: Box<PredRef>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasRef {
    pub name: String,
    pub regs: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CondSpec {
    MeasEq { left: MeasRef, right: MeasRef },
    /// The loops of the node's two fragments agree on their exit profiles.
    LoopEq,
    Separable { parts: Vec<Vec<String>> },
    SeparableSides,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FrameJson {
    #[serde(default)]
    pub left: Vec<String>,
    #[serde(default)]
    pub right: Vec<String>,
    pub c: Option<PredRef>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Node {
    pub rule: Option<String>,
    pub seq: Option<Vec<Node>>,
    pub left: Option<String>,
    pub right: Option<String>,
    pub pre: Option<PredRef>,
    pub post: Option<PredRef>,
    #[serde(default)]
    pub gamma: Vec<CondSpec>,
    #[serde(default)]
    pub premises: Vec<Node>,
    pub pairs: Option<Vec<(usize, usize)>>,
    #[serde(default)]
    pub probs: Vec<f64>,
    pub frame: Option<FrameJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Outline {
    pub left: String,
    pub right: String,
    #[serde(default)]
    pub predicates: BTreeMap<String, PredRef>,
    pub pre: Option<PredRef>,
    pub post: Option<PredRef>,
    #[serde(default)]
    pub projective: bool,
    pub derivation: Node,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutlineReport {
    pub valid: bool,
    pub conclusion: String,
    /// Mismatches between the derivation and the outline's stated judgment.
    pub errors: Vec<String>,
    pub derivation: DerivationReport,
}

/// Programs and predicate names of an outline.
pub struct Context {
    pub left: Scope,
    pub right: Scope,
    pub predicates: BTreeMap<String, PredRef>,
}

impl Context {
    pub fn new(left: &str, right: &str, predicates: BTreeMap<String, PredRef>) -> Result<Context> {
        Ok(Context { left: Scope::of(left)?, right: Scope::of(right)?, predicates })
    }

    /// Resolves a predicate on a d₁ ⊗ d₂ space.
    pub fn predicate(&self, r: &PredRef, d1: usize, d2: usize) -> Result<Matrix> {
        self.resolve(r, d1, d2, 0)
    }

    fn resolve(&self, r: &PredRef, d1: usize, d2: usize, depth: usize) -> Result<Matrix> {
        if depth > 32 {
            return Err(Error::Invalid("predicate definitions are cyclic".into()));
        }
        let n = d1 * d2;
        let m = match r {
            PredRef::Matrix(m) => m.clone(),
            PredRef::Name(s) => match self.predicates.get(s) {
                Some(def) => self.resolve(def, d1, d2, depth + 1)?,
                None => named(s, d1, d2)?,
            },
            PredRef::Scale { scale, of } => self.resolve(of, d1, d2, depth + 1)?.scale_re(*scale),
            PredRef::Sum { sum } => {
                let mut acc = Matrix::zeros(n, n);
                for p in sum {
                    acc = &acc + &self.resolve(p, d1, d2, depth + 1)?;
                }
                acc
            }
            PredRef::Conj { conj } => {
                let u = gate_product(&conj.left, d1)?.kron(&gate_product(&conj.right, d2)?);
                u.sandwich(&self.resolve(&conj.of, d1, d2, depth + 1)?)
            }
        };
        if m.dims() != (n, n) {
            return Err(Error::dim(format!("predicate is {:?}, expected {n}x{n}", m.dims())));
        }
        Ok(m)
    }

    fn fragment(&self, scope: &Scope, src: Option<&str>, live: &[String]) -> Result<Program> {
        scope.fragment(src.unwrap_or("skip"))?.restrict(live)
    }

    fn condition(&self, c: &CondSpec, p1: &Program, p2: &Program) -> Result<SideCondition> {
        match c {
            CondSpec::MeasEq { left, right } => {
                let m1 = self.left.measurement(&left.name, &left.regs)?;
                let m2 = self.right.measurement(&right.name, &right.regs)?;
                SideCondition::meas_eq(p1, &m1, &left.regs, p2, &m2, &right.regs)
            }
            CondSpec::LoopEq => {
                let (m1, r1, b1) = loop_parts(p1)?;
                let (m2, r2, b2) = loop_parts(p2)?;
                SideCondition::meas_loop_eq(&b1, &m1, &r1, &b2, &m2, &r2)
            }
            CondSpec::Separable { parts } => SideCondition::separability(p1, p2, parts),
            CondSpec::SeparableSides => SideCondition::separable_sides(p1, p2),
        }
    }

    /// Builds the derivation of a node whose programs start with the given
    /// live registers. `post_hint` is used when the node leaves its
    /// postcondition implicit.
    pub fn build(&self, node: &Node, live1: &[String], live2: &[String], post_hint: Option<&Matrix>) -> Result<Derivation> {
        if let Some(items) = &node.seq {
            return self.build_seq(node, items, live1, live2, post_hint);
        }
        let rule: Rule = node.rule.as_deref().ok_or_else(|| Error::Invalid("node needs a rule or a seq".into()))?.parse()?;
        let (p1, p2) = self.programs(node, live1, live2)?;
        let (din1, din2) = (p1.input_dim(), p2.input_dim());
        let (dout1, dout2) = (p1.output_dim(), p2.output_dim());
        let gamma = node.gamma.iter().map(|c| self.condition(c, &p1, &p2)).collect::<Result<Vec<_>>>()?;
        let given_pre = node.pre.as_ref().map(|r| self.predicate(r, din1, din2)).transpose()?;
        let given_post = match node.post.as_ref() {
            Some(r) => Some(self.predicate(r, dout1, dout2)?),
            None => post_hint.cloned(),
        };
        let names = (node.pre.as_ref().and_then(name_of), node.post.as_ref().and_then(name_of));

        // Premises live on the same registers, except under (Frame).
        let (pl1, pl2) = match &node.frame {
            Some(f) if rule == Rule::Frame => (minus(live1, &f.left), minus(live2, &f.right)),
            _ => (live1.to_vec(), live2.to_vec()),
        };
        let premise_hint = match rule {
            Rule::If | Rule::IfW | Rule::IfL | Rule::IfR | Rule::If1 | Rule::If1L | Rule::If1R => given_post.clone(),
            Rule::IfP | Rule::IfPL | Rule::IfPR | Rule::Case | Rule::Weaken => given_post.clone(),
            Rule::Lp1 | Rule::Lp1L | Rule::Lp1R | Rule::LpP | Rule::LpPL | Rule::LpPR => given_pre.clone(),
            _ => None,
        };
        let mut premises = Vec::new();
        for p in &node.premises {
            premises.push(self.build(p, &pl1, &pl2, premise_hint.as_ref())?);
        }
        let mut payload = Payload { pairs: node.pairs.clone(), probs: node.probs.clone(), ..Payload::default() };
        if let Some(f) = &node.frame {
            let (v1, v2) = (dims_of(&p1, &f.left), dims_of(&p2, &f.right));
            let c = match &f.c {
                Some(r) => self.predicate(r, v1, v2)?,
                None => Matrix::identity(v1 * v2),
            };
            payload.frame = Some(FrameSpec { left: f.left.clone(), right: f.right.clone(), c });
        }

        let mut d = Derivation::new(rule, p1, p2, Matrix::zeros(0, 0), Matrix::zeros(0, 0));
        d.gamma = gamma;
        d.premises = premises;
        d.payload = payload;
        d.names = names;
        let premise_post = || d.premises.first().map(|p| p.post.clone());
        d.post = match given_post {
            Some(m) => m,
            None if rule.is_forward() => {
                let pre = given_pre.clone().ok_or_else(|| Error::rule(rule.name(), "a precondition is needed"))?;
                let inst = Derivation::forward(rule, d.left.clone(), d.right.clone(), pre)?;
                inst.post
            }
            None => match rule {
                Rule::Weaken | Rule::Case | Rule::If | Rule::IfW | Rule::IfL | Rule::IfR => premise_post(),
                Rule::If1 | Rule::If1L | Rule::If1R | Rule::IfP | Rule::IfPL | Rule::IfPR => premise_post(),
                Rule::Frame => d.payload.frame.as_ref().zip(d.premises.first()).and_then(|(f, p)| {
                    let (v1, v2) = (f.c.rows() / dims_of(&d.right, &f.right), dims_of(&d.right, &f.right));
                    super::transform::frame_split(&p.post, &f.c, p.left.output_dim(), p.right.output_dim(), v1, v2).ok()
                }),
                _ => None,
            }
            .ok_or_else(|| Error::rule(rule.name(), "the postcondition must be given"))?,
        };
        d.pre = match given_pre {
            Some(m) => m,
            None => match rule {
                Rule::Lp1 | Rule::Lp1L | Rule::Lp1R | Rule::LpP | Rule::LpPL | Rule::LpPR => {
                    premise_post().ok_or_else(|| Error::rule(rule.name(), "a premise is needed"))?
                }
                Rule::Sc | Rule::ScPlus => d
                    .premises
                    .first()
                    .map(|p| p.pre.clone())
                    .ok_or_else(|| Error::rule(rule.name(), "premises are needed"))?,
                r if r.is_forward() => return Err(Error::rule(r.name(), "a precondition is needed")),
                _ => precondition_of(&d.instance(), &d.post)?,
            },
        };
        Ok(d)
    }

    fn build_seq(&self, node: &Node, items: &[Node], live1: &[String], live2: &[String], hint: Option<&Matrix>) -> Result<Derivation> {
        if items.is_empty() {
            return Err(Error::Invalid("empty seq".into()));
        }
        let mut lives = vec![(live1.to_vec(), live2.to_vec())];
        for it in items {
            let (l, r) = lives.last().expect("nonempty").clone();
            let (p1, p2) = self.programs(it, &l, &r)?;
            lives.push((p1.outputs().to_vec(), p2.outputs().to_vec()));
        }
        let (l_end, r_end) = lives.last().expect("nonempty");
        let own_post = node
            .post
            .as_ref()
            .map(|r| self.predicate(r, dims_of_live(&self.left, l_end), dims_of_live(&self.right, r_end)))
            .transpose()?;
        let mut next_hint = own_post.or_else(|| hint.cloned());
        let mut built: Vec<Derivation> = Vec::new();
        for (k, it) in items.iter().enumerate().rev() {
            let d = self.build(it, &lives[k].0, &lives[k].1, next_hint.as_ref())?;
            next_hint = Some(d.pre.clone());
            built.push(d);
        }
        // Right-nested composition, so that contexts are compared pairwise.
        let mut acc = built.remove(0);
        for d in built {
            acc = d.then(acc)?;
        }
        Ok(acc)
    }

    /// The two programs a node is about.
    pub fn programs(&self, node: &Node, live1: &[String], live2: &[String]) -> Result<(Program, Program)> {
        if let Some(items) = &node.seq {
            let mut l = live1.to_vec();
            let mut r = live2.to_vec();
            let mut acc: Option<(Program, Program)> = None;
            for it in items {
                let (a, b) = self.programs(it, &l, &r)?;
                l = a.outputs().to_vec();
                r = b.outputs().to_vec();
                acc = Some(match acc {
                    None => (a, b),
                    Some((x, y)) => (join(&x, &a)?, join(&y, &b)?),
                });
            }
            return acc.ok_or_else(|| Error::Invalid("empty seq".into()));
        }
        if node.left.is_none() && node.right.is_none() {
            if let Some(p) = node.premises.first() {
                return self.programs(p, live1, live2);
            }
        }
        Ok((
            self.fragment(&self.left, node.left.as_deref(), live1)?,
            self.fragment(&self.right, node.right.as_deref(), live2)?,
        ))
    }
}

fn join(a: &Program, b: &Program) -> Result<Program> {
    let mut regs = a.registers.clone();
    for r in &b.registers {
        if !regs.iter().any(|x| x.name == r.name) {
            regs.push(r.clone());
        }
    }
    Program::new(regs, crate::lang::Stmt::seq(vec![a.body.clone(), b.body.clone()]))?.restrict(a.inputs())
}

fn minus(live: &[String], drop: &[String]) -> Vec<String> {
    live.iter().filter(|q| !drop.contains(q)).cloned().collect()
}

fn dims_of(p: &Program, regs: &[String]) -> usize {
    regs.iter().map(|q| p.dim_of(q).unwrap_or(1)).product()
}

fn dims_of_live(s: &Scope, live: &[String]) -> usize {
    dims_of(&s.program, live)
}

fn name_of(r: &PredRef) -> Option<String> {
    match r {
        PredRef::Name(s) => Some(s.clone()),
        _ => None,
    }
}

fn loop_parts(p: &Program) -> Result<(crate::lang::Measurement, Vec<String>, Program)> {
    match &p.body {
        crate::lang::Stmt::WhileMeas { regs, meas, body } => Ok((meas.clone(), regs.clone(), p.with_body((**body).clone())?)),
        _ => Err(Error::Invalid("loop_eq needs loop fragments".into())),
    }
}

fn gate_product(names: &[String], d: usize) -> Result<Matrix> {
    let mut u = Matrix::identity(d);
    for n in names {
        let g = builtins::gate(n, d).ok_or_else(|| Error::Invalid(format!("no gate {n} of dimension {d}")))?;
        u = u.matmul(&g.matrix);
    }
    Ok(u)
}

/// Built-in predicates on d₁ ⊗ d₂.
fn named(s: &str, d1: usize, d2: usize) -> Result<Matrix> {
    let square = || {
        if d1 == d2 {
            Ok(d1)
        } else {
            Err(Error::dim(format!("{s} needs equal dimensions, found {d1} and {d2}")))
        }
    };
    Ok(match s {
        "identity" => Matrix::identity(d1 * d2),
        "zero" => Matrix::zeros(d1 * d2, d1 * d2),
        "sym" => sym_projector(square()?),
        "swap" => swap_operator(square()?),
        "basis_eq" => basis_eq_projector(&Matrix::identity(square()?)),
        "max_entangled" => max_entangled_projector(square()?),
        _ => return Err(Error::Invalid(format!("unknown predicate {s}"))),
    })
}

impl Outline {
    pub fn from_json(s: &str) -> Result<Outline> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn context(&self) -> Result<Context> {
        Context::new(&self.left, &self.right, self.predicates.clone())
    }

    pub fn derivation(&self) -> Result<(Context, Derivation)> {
        let cx = self.context()?;
        let p1 = cx.left.program.clone();
        let p2 = cx.right.program.clone();
        let post = self
            .post
            .as_ref()
            .map(|r| cx.predicate(r, p1.output_dim(), p2.output_dim()))
            .transpose()?;
        let d = cx.build(&self.derivation, p1.inputs(), p2.inputs(), post.as_ref())?;
        Ok((cx, d))
    }

    pub fn check(&self, opts: &CheckOptions) -> Result<OutlineReport> {
        let (cx, d) = self.derivation()?;
        let mut opts = opts.clone();
        opts.projective |= self.projective;
        let mut errors = Vec::new();
        let (p1, p2) = (&cx.left.program, &cx.right.program);
        if d.left.body.without_skips() != p1.body.without_skips() || d.right.body.without_skips() != p2.body.without_skips() {
            errors.push("the derivation is about different programs than the outline".to_string());
        }
        for (r, m, what, d1, d2) in [
            (&self.pre, &d.pre, "precondition", p1.input_dim(), p2.input_dim()),
            (&self.post, &d.post, "postcondition", p1.output_dim(), p2.output_dim()),
        ] {
            if let Some(r) = r {
                let want = cx.predicate(r, d1, d2)?;
                if want.dims() != m.dims() || want.max_abs_diff(m) > MATCH_TOL {
                    errors.push(format!("derived {what} differs from the stated one"));
                }
            }
        }
        let report = check_derivation(&d, &opts);
        Ok(OutlineReport { valid: report.valid && errors.is_empty(), conclusion: d.describe(), errors, derivation: report })
    }
}
