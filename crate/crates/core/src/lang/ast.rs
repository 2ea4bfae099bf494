use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{is_unitary, kraus_completeness, Matrix, Shape};

const CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub name: String,
    pub matrix: Matrix,
}

/// Outcome-labelled measurement operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub name: String,
    pub outcomes: Vec<(String, Matrix)>,
}

impl Measurement {
    pub fn new(name: impl Into<String>, outcomes: Vec<(String, Matrix)>) -> Measurement {
        Measurement { name: name.into(), outcomes }
    }

    /// Binary measurement with outcomes "0" and "1".
    pub fn binary(name: impl Into<String>, m0: Matrix, m1: Matrix) -> Measurement {
        Measurement::new(name, vec![("0".into(), m0), ("1".into(), m1)])
    }

    pub fn dim(&self) -> usize {
        self.outcomes.first().map_or(0, |(_, m)| m.cols())
    }

    pub fn operator(&self, label: &str) -> Option<&Matrix> {
        self.outcomes.iter().find(|(l, _)| l == label).map(|(_, m)| m)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.outcomes.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn operators(&self) -> Vec<Matrix> {
        self.outcomes.iter().map(|(_, m)| m.clone()).collect()
    }

    pub fn is_binary(&self) -> bool {
        let mut l = self.labels();
        l.sort_unstable();
        l == ["0", "1"]
    }

    /// Checks Σ Mₘ†Mₘ = I.
    pub fn validate(&self) -> Result<()> {
        if self.outcomes.is_empty() {
            return Err(Error::Program(format!("measurement {} has no outcomes", self.name)));
        }
        let d = self.dim();
        if self.outcomes.iter().any(|(_, m)| m.dims() != (d, d)) {
            return Err(Error::Program(format!("measurement {} mixes operator sizes", self.name)));
        }
        let mut seen = BTreeSet::new();
        for (l, _) in &self.outcomes {
            if !seen.insert(l) {
                return Err(Error::Program(format!("measurement {} repeats outcome {l}", self.name)));
            }
        }
        let s = kraus_completeness(&self.operators())?;
        if !s.approx_eq(&Matrix::identity(d), CHECK_TOL) {
            return Err(Error::Program(format!("incomplete measurement {}", self.name)));
        }
        Ok(())
    }
}

/// A trace-preserving superoperator given by Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub name: String,
    pub kraus: Vec<Matrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Skip,
    Seq(Vec<Stmt>),
    Init(String),
    Unitary { regs: Vec<String>, gate: Gate },
    IfMeas { regs: Vec<String>, meas: Measurement, branches: Vec<Stmt> },
    WhileMeas { regs: Vec<String>, meas: Measurement, body: Box<Stmt> },
    ApplySuper { inputs: Vec<String>, outputs: Vec<String>, channel: Channel },
    TraceOut(String),
}

impl Stmt {
    /// Sequential composition that flattens nested sequences and drops
    /// nothing, so that printing and re-parsing yields the same tree.
    pub fn seq(parts: Vec<Stmt>) -> Stmt {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Stmt::Seq(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Stmt::Skip,
            1 => out.pop().expect("one element"),
            _ => Stmt::Seq(out),
        }
    }

    /// The statement with `skip` removed from every sequence.
    pub fn without_skips(&self) -> Stmt {
        match self {
            Stmt::Seq(v) => Stmt::seq(v.iter().map(Stmt::without_skips).filter(|s| *s != Stmt::Skip).collect()),
            Stmt::IfMeas { regs, meas, branches } => Stmt::IfMeas {
                regs: regs.clone(),
                meas: meas.clone(),
                branches: branches.iter().map(Stmt::without_skips).collect(),
            },
            Stmt::WhileMeas { regs, meas, body } => {
                Stmt::WhileMeas { regs: regs.clone(), meas: meas.clone(), body: Box::new(body.without_skips()) }
            }
            other => other.clone(),
        }
    }

    /// Top-level statements of a sequence.
    pub fn items(&self) -> &[Stmt] {
        match self {
            Stmt::Seq(v) => v,
            other => std::slice::from_ref(other),
        }
    }

    fn for_each_name(&self, f: &mut impl FnMut(&str)) {
        match self {
            Stmt::Skip => {}
            Stmt::Seq(v) => v.iter().for_each(|s| s.for_each_name(f)),
            Stmt::Init(q) | Stmt::TraceOut(q) => f(q),
            Stmt::Unitary { regs, .. } => regs.iter().for_each(|q| f(q)),
            Stmt::IfMeas { regs, branches, .. } => {
                regs.iter().for_each(|q| f(q));
                branches.iter().for_each(|s| s.for_each_name(f));
            }
            Stmt::WhileMeas { regs, body, .. } => {
                regs.iter().for_each(|q| f(q));
                body.for_each_name(f);
            }
            Stmt::ApplySuper { inputs, outputs, .. } => {
                inputs.iter().for_each(|q| f(q));
                outputs.iter().for_each(|q| f(q));
            }
        }
    }

    fn rename(&self, r: &impl Fn(&str) -> String) -> Stmt {
        let rv = |v: &Vec<String>| v.iter().map(|q| r(q)).collect::<Vec<_>>();
        match self {
            Stmt::Skip => Stmt::Skip,
            Stmt::Seq(v) => Stmt::Seq(v.iter().map(|s| s.rename(r)).collect()),
            Stmt::Init(q) => Stmt::Init(r(q)),
            Stmt::TraceOut(q) => Stmt::TraceOut(r(q)),
            Stmt::Unitary { regs, gate } => Stmt::Unitary { regs: rv(regs), gate: gate.clone() },
            Stmt::IfMeas { regs, meas, branches } => Stmt::IfMeas {
                regs: rv(regs),
                meas: meas.clone(),
                branches: branches.iter().map(|s| s.rename(r)).collect(),
            },
            Stmt::WhileMeas { regs, meas, body } => {
                Stmt::WhileMeas { regs: rv(regs), meas: meas.clone(), body: Box::new(body.rename(r)) }
            }
            Stmt::ApplySuper { inputs, outputs, channel } => {
                Stmt::ApplySuper { inputs: rv(inputs), outputs: rv(outputs), channel: channel.clone() }
            }
        }
    }
}

/// A program together with its register table. The table order fixes the
/// tensor order of every state space the program acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub registers: Vec<Register>,
    pub body: Stmt,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl Program {
    /// Builds and checks a program. Registers used in `body` but missing from
    /// `registers` are appended with dimension 2.
    pub fn new(registers: Vec<Register>, body: Stmt) -> Result<Program> {
        let registers = complete_table(registers, &body);
        let (inputs, outputs) = analyze(&registers, &body).map_err(|(_, e)| e)?;
        Ok(Program { registers, body, inputs, outputs })
    }

    pub(crate) fn from_parts(
        registers: Vec<Register>,
        body: Stmt,
    ) -> std::result::Result<Program, (usize, Error)> {
        let registers = complete_table(registers, &body);
        let (inputs, outputs) = analyze(&registers, &body)?;
        Ok(Program { registers, body, inputs, outputs })
    }

    pub fn skip(registers: Vec<Register>) -> Program {
        Program::new(registers, Stmt::Skip).expect("skip is well formed")
    }

    pub fn dim_of(&self, name: &str) -> Option<usize> {
        self.registers.iter().find(|r| r.name == name).map(|r| r.dim)
    }

    /// Registers live on entry, in table order.
    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    /// Registers live on exit, in table order.
    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn shape_of(&self, names: &[String]) -> Shape {
        Shape::new(names.iter().map(|n| self.dim_of(n).unwrap_or(1)).collect()).expect("dims positive")
    }

    pub fn input_shape(&self) -> Shape {
        self.shape_of(&self.inputs)
    }

    pub fn output_shape(&self) -> Shape {
        self.shape_of(&self.outputs)
    }

    pub fn input_dim(&self) -> usize {
        self.input_shape().total()
    }

    pub fn output_dim(&self) -> usize {
        self.output_shape().total()
    }

    /// Sorts names into table order.
    pub fn ordered(&self, names: &BTreeSet<String>) -> Vec<String> {
        self.registers.iter().filter(|r| names.contains(&r.name)).map(|r| r.name.clone()).collect()
    }

    /// Renames every register `q` to `q<tag>`.
    pub fn tag_copy(&self, tag: u8) -> Program {
        let r = |q: &str| format!("{q}<{tag}>");
        Program {
            registers: self.registers.iter().map(|x| Register { name: r(&x.name), dim: x.dim }).collect(),
            body: self.body.rename(&r),
            inputs: self.inputs.iter().map(|q| r(q)).collect(),
            outputs: self.outputs.iter().map(|q| r(q)).collect(),
        }
    }

    /// Sequential composition; register tables are merged.
    pub fn then(&self, next: &Program) -> Result<Program> {
        let mut regs = self.registers.clone();
        for r in &next.registers {
            match regs.iter().find(|x| x.name == r.name) {
                Some(x) if x.dim != r.dim => {
                    return Err(Error::Program(format!("register {} declared with two dimensions", r.name)))
                }
                Some(_) => {}
                None => regs.push(r.clone()),
            }
        }
        Program::new(regs, Stmt::seq(vec![self.body.clone(), next.body.clone()]))
    }

    /// The same body over the registers in `live` and those the body
    /// creates. Fails if the body touches any other register.
    pub fn restrict(&self, live: &[String]) -> Result<Program> {
        let mut seen = BTreeSet::new();
        let mut created = BTreeSet::new();
        first_uses(&self.body, &mut seen, &mut created);
        if let Some(q) = seen.iter().find(|q| !created.contains(*q) && !live.contains(q)) {
            return Err(Error::Program(format!("register {q} is not live here")));
        }
        let regs = self
            .registers
            .iter()
            .filter(|r| live.contains(&r.name) || created.contains(&r.name))
            .cloned()
            .collect();
        Program::new(regs, self.body.clone())
    }

    /// A program with the same table and a different body.
    pub fn with_body(&self, body: Stmt) -> Result<Program> {
        Program::new(self.registers.clone(), body)
    }
}

fn complete_table(mut registers: Vec<Register>, body: &Stmt) -> Vec<Register> {
    body.for_each_name(&mut |q| {
        if !registers.iter().any(|r| r.name == q) {
            registers.push(Register { name: q.to_string(), dim: 2 });
        }
    });
    registers
}

/// Liveness and typing analysis. Errors carry the pre-order index of the
/// offending statement (sequences are not counted).
fn analyze(
    registers: &[Register],
    body: &Stmt,
) -> std::result::Result<(Vec<String>, Vec<String>), (usize, Error)> {
    let mut names = BTreeSet::new();
    for r in registers {
        if r.dim == 0 {
            return Err((0, Error::Program(format!("register {} has dimension 0", r.name))));
        }
        if !names.insert(r.name.clone()) {
            return Err((0, Error::Program(format!("register {} declared twice", r.name))));
        }
    }
    let mut seen = BTreeSet::new();
    let mut created = BTreeSet::new();
    first_uses(body, &mut seen, &mut created);
    let start: BTreeSet<String> = registers.iter().map(|r| r.name.clone()).filter(|n| !created.contains(n)).collect();
    let mut a = Analyzer { registers, counter: 0 };
    let end = a.stmt(body, start.clone())?;
    let order = |s: &BTreeSet<String>| -> Vec<String> {
        registers.iter().filter(|r| s.contains(&r.name)).map(|r| r.name.clone()).collect()
    };
    Ok((order(&start), order(&end)))
}

fn first_uses(s: &Stmt, seen: &mut BTreeSet<String>, created: &mut BTreeSet<String>) {
    let mut touch = |q: &str, creates: bool, seen: &mut BTreeSet<String>| {
        if seen.insert(q.to_string()) && creates {
            created.insert(q.to_string());
        }
    };
    match s {
        Stmt::Skip => {}
        Stmt::Seq(v) => v.iter().for_each(|x| first_uses(x, seen, created)),
        Stmt::Init(q) | Stmt::TraceOut(q) => touch(q, false, seen),
        Stmt::Unitary { regs, .. } => regs.iter().for_each(|q| touch(q, false, seen)),
        Stmt::IfMeas { regs, branches, .. } => {
            regs.iter().for_each(|q| touch(q, false, seen));
            branches.iter().for_each(|b| first_uses(b, seen, created));
        }
        Stmt::WhileMeas { regs, body, .. } => {
            regs.iter().for_each(|q| touch(q, false, seen));
            first_uses(body, seen, created);
        }
        Stmt::ApplySuper { inputs, outputs, .. } => {
            inputs.iter().for_each(|q| touch(q, false, seen));
            for q in outputs {
                let c = !inputs.contains(q);
                touch(q, c, seen);
            }
        }
    }
}

struct Analyzer<'a> {
    registers: &'a [Register],
    counter: usize,
}

impl Analyzer<'_> {
    fn dim(&self, q: &str) -> usize {
        self.registers.iter().find(|r| r.name == q).map_or(2, |r| r.dim)
    }

    fn total(&self, regs: &[String]) -> usize {
        regs.iter().map(|q| self.dim(q)).product()
    }

    fn stmt(&mut self, s: &Stmt, live: BTreeSet<String>) -> std::result::Result<BTreeSet<String>, (usize, Error)> {
        if let Stmt::Seq(v) = s {
            let mut live = live;
            for x in v {
                live = self.stmt(x, live)?;
            }
            return Ok(live);
        }
        let id = self.counter;
        self.counter += 1;
        let fail = |msg: String| Err((id, Error::Program(msg)));
        let need_live = |regs: &[String], live: &BTreeSet<String>| -> std::result::Result<(), (usize, Error)> {
            for (i, q) in regs.iter().enumerate() {
                if !live.contains(q) {
                    return Err((id, Error::Program(format!("unknown register {q} (not live here)"))));
                }
                if regs[..i].contains(q) {
                    return Err((id, Error::Program(format!("register {q} listed twice"))));
                }
            }
            Ok(())
        };
        match s {
            Stmt::Seq(_) => unreachable!(),
            Stmt::Skip => Ok(live),
            Stmt::Init(q) => {
                need_live(std::slice::from_ref(q), &live)?;
                Ok(live)
            }
            Stmt::TraceOut(q) => {
                need_live(std::slice::from_ref(q), &live)?;
                let mut live = live;
                live.remove(q);
                Ok(live)
            }
            Stmt::Unitary { regs, gate } => {
                need_live(regs, &live)?;
                let d = self.total(regs);
                if gate.matrix.dims() != (d, d) {
                    return fail(format!(
                        "gate {} is {}x{} but registers {:?} have dimension {d}",
                        gate.name,
                        gate.matrix.rows(),
                        gate.matrix.cols(),
                        regs
                    ));
                }
                if !is_unitary(&gate.matrix, CHECK_TOL) {
                    return fail(format!("non-unitary gate {}", gate.name));
                }
                Ok(live)
            }
            Stmt::IfMeas { regs, meas, branches } => {
                need_live(regs, &live)?;
                self.check_meas(id, regs, meas)?;
                if branches.len() != meas.outcomes.len() {
                    return fail(format!("if over {} needs one branch per outcome", meas.name));
                }
                let mut end: Option<BTreeSet<String>> = None;
                for b in branches {
                    let e = self.stmt(b, live.clone())?;
                    match &end {
                        None => end = Some(e),
                        Some(prev) if *prev != e => {
                            return Err((id, Error::Program("if branches end with different registers".into())))
                        }
                        _ => {}
                    }
                }
                Ok(end.unwrap_or(live))
            }
            Stmt::WhileMeas { regs, meas, body } => {
                need_live(regs, &live)?;
                self.check_meas(id, regs, meas)?;
                if !meas.is_binary() {
                    return fail(format!("loop measurement {} must have outcomes 0 and 1", meas.name));
                }
                let e = self.stmt(body, live.clone())?;
                if e != live {
                    return Err((id, Error::Program("loop body changes the set of registers".into())));
                }
                Ok(live)
            }
            Stmt::ApplySuper { inputs, outputs, channel } => {
                need_live(inputs, &live)?;
                for (i, q) in outputs.iter().enumerate() {
                    if outputs[..i].contains(q) {
                        return fail(format!("register {q} listed twice"));
                    }
                    if live.contains(q) && !inputs.contains(q) {
                        return fail(format!("register {q} is already live"));
                    }
                }
                let (di, dout) = (self.total(inputs), self.total(outputs));
                if channel.kraus.is_empty() {
                    return fail(format!("channel {} has no Kraus operators", channel.name));
                }
                if channel.kraus.iter().any(|k| k.dims() != (dout, di)) {
                    return fail(format!("channel {} does not map dimension {di} to {dout}", channel.name));
                }
                let s = kraus_completeness(&channel.kraus).map_err(|e| (id, e))?;
                if !s.approx_eq(&Matrix::identity(di), CHECK_TOL) {
                    return fail(format!("channel {} is not trace-preserving", channel.name));
                }
                let mut live = live;
                for q in inputs {
                    live.remove(q);
                }
                live.extend(outputs.iter().cloned());
                Ok(live)
            }
        }
    }

    fn check_meas(&self, id: usize, regs: &[String], meas: &Measurement) -> std::result::Result<(), (usize, Error)> {
        meas.validate().map_err(|e| (id, e))?;
        let d = self.total(regs);
        if meas.dim() != d {
            return Err((
                id,
                Error::Program(format!("measurement {} has dimension {} but registers have {d}", meas.name, meas.dim())),
            ));
        }
        Ok(())
    }
}
