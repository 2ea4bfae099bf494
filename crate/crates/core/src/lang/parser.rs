use std::collections::HashMap;

use super::ast::{Channel, Gate, Measurement, Program, Register, Stmt};
use super::builtins;
use super::lexer::{lex, Tok, Token};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, C64};

#[derive(Clone, Debug)]
enum Value {
    Matrix(Matrix),
    Meas(Vec<(String, Matrix)>),
    Kraus(Vec<Matrix>),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    lets: HashMap<String, Value>,
    decls: Vec<Register>,
    /// Source position of every non-sequence statement, in pre-order.
    positions: Vec<(usize, usize)>,
}

/// Parses program text. Positions in errors are 1-based line and column.
pub fn parse(src: &str) -> Result<Program> {
    Ok(parse_scoped(src, HashMap::new(), Vec::new())?.0)
}

fn parse_scoped(src: &str, lets: HashMap<String, Value>, decls: Vec<Register>) -> Result<(Program, HashMap<String, Value>)> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, lets, decls, positions: Vec::new() };
    p.preamble()?;
    let body = p.stmts()?;
    if p.peek() != &Tok::Eof {
        return Err(p.err("expected end of program"));
    }
    let positions = p.positions;
    let prog = Program::from_parts(p.decls, body).map_err(|(id, e)| {
        let (line, col) = positions.get(id).copied().unwrap_or((1, 1));
        Error::Parse { line, col, msg: e.to_string() }
    })?;
    Ok((prog, p.lets))
}

/// The declarations of a program: its register table and `let` bindings.
/// Fragments parsed in a scope act on the whole table.
#[derive(Clone, Debug)]
pub struct Scope {
    lets: HashMap<String, Value>,
    pub program: Program,
}

impl Scope {
    pub fn of(src: &str) -> Result<Scope> {
        let (program, lets) = parse_scoped(src, HashMap::new(), Vec::new())?;
        Ok(Scope { lets, program })
    }

    pub fn of_program(program: &Program) -> Scope {
        Scope { lets: HashMap::new(), program: program.clone() }
    }

    pub fn registers(&self) -> &[Register] {
        &self.program.registers
    }

    /// Parses statements against this scope.
    pub fn fragment(&self, src: &str) -> Result<Program> {
        Ok(parse_scoped(src, self.lets.clone(), self.program.registers.clone())?.0)
    }

    /// Resolves a measurement name on the given registers.
    pub fn measurement(&self, name: &str, regs: &[String]) -> Result<Measurement> {
        let dims: Vec<usize> = regs
            .iter()
            .map(|q| self.program.dim_of(q).ok_or_else(|| Error::Invalid(format!("unknown register {q}"))))
            .collect::<Result<_>>()?;
        match self.lets.get(name) {
            Some(Value::Meas(outs)) => Ok(Measurement::new(name, outs.clone())),
            Some(_) => Err(Error::Invalid(format!("{name} is not a measurement"))),
            None => builtins::measurement(name, &dims).ok_or_else(|| Error::Invalid(format!("unknown measurement {name}"))),
        }
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (line, col) = self.here();
        Error::Parse { line, col, msg: format!("{} (found {})", msg.into(), describe(self.peek())) }
    }

    fn err_at(&self, at: (usize, usize), msg: impl Into<String>) -> Error {
        Error::Parse { line: at.0, col: at.1, msg: msg.into() }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if *self.peek() == t {
            self.next();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn preamble(&mut self) -> Result<()> {
        loop {
            match self.peek() {
                Tok::Let => {
                    self.next();
                    let name = self.ident()?;
                    self.expect(Tok::Eq, "'='")?;
                    let v = self.value()?;
                    self.expect(Tok::Semi, "';'")?;
                    self.lets.insert(name, v);
                }
                Tok::Var => {
                    self.next();
                    loop {
                        let at = self.here();
                        let name = self.ident()?;
                        self.expect(Tok::Colon, "':'")?;
                        let d = self.integer()?;
                        if d == 0 {
                            return Err(self.err_at(at, "register dimension must be positive"));
                        }
                        if self.decls.iter().any(|r| r.name == name) {
                            return Err(self.err_at(at, format!("register {name} declared twice")));
                        }
                        self.decls.push(Register { name, dim: d });
                        if *self.peek() != Tok::Comma {
                            break;
                        }
                        self.next();
                    }
                    self.expect(Tok::Semi, "';'")?;
                }
                _ => return Ok(()),
            }
        }
    }

    fn integer(&mut self) -> Result<usize> {
        match self.peek().clone() {
            Tok::Num(z, raw) if z.im == 0.0 && raw.chars().all(|c| c.is_ascii_digit()) => {
                self.next();
                raw.parse().map_err(|_| self.err("integer out of range"))
            }
            _ => Err(self.err("expected integer")),
        }
    }

    fn label(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Num(z, raw) if z.im == 0.0 && raw.chars().all(|c| c.is_ascii_digit()) => {
                self.next();
                Ok(raw)
            }
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.err("expected outcome label")),
        }
    }

    fn value(&mut self) -> Result<Value> {
        match self.peek() {
            Tok::Meas => {
                self.next();
                self.expect(Tok::LBrace, "'{'")?;
                let mut outs = Vec::new();
                while *self.peek() != Tok::RBrace {
                    let l = self.label()?;
                    self.expect(Tok::Colon, "':'")?;
                    let m = self.matrix_expr()?;
                    outs.push((l, m));
                    if *self.peek() == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace, "'}'")?;
                if outs.is_empty() {
                    return Err(self.err("measurement without outcomes"));
                }
                Ok(Value::Meas(outs))
            }
            Tok::Kraus => {
                self.next();
                self.expect(Tok::LBrace, "'{'")?;
                let mut ks = Vec::new();
                while *self.peek() != Tok::RBrace {
                    ks.push(self.matrix_expr()?);
                    if *self.peek() == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace, "'}'")?;
                if ks.is_empty() {
                    return Err(self.err("empty Kraus list"));
                }
                Ok(Value::Kraus(ks))
            }
            _ => Ok(Value::Matrix(self.matrix_expr()?)),
        }
    }

    fn scalar(&mut self) -> Result<C64> {
        let neg = if *self.peek() == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        let v = match self.peek().clone() {
            Tok::Num(z, _) => {
                self.next();
                z
            }
            Tok::Ident(s) if s == "i" => {
                self.next();
                C64::new(0.0, 1.0)
            }
            Tok::Sqrt => {
                self.next();
                self.expect(Tok::LParen, "'('")?;
                let z = match self.next() {
                    Tok::Num(z, _) if z.im == 0.0 && z.re >= 0.0 => z.re,
                    _ => return Err(self.err("sqrt takes a nonnegative real")),
                };
                self.expect(Tok::RParen, "')'")?;
                C64::new(z.sqrt(), 0.0)
            }
            _ => return Err(self.err("expected number")),
        };
        Ok(if neg { -v } else { v })
    }

    fn matrix_expr(&mut self) -> Result<Matrix> {
        let at = self.here();
        let factor = if *self.peek() == Tok::LBrack {
            None
        } else {
            let s = self.scalar()?;
            self.expect(Tok::Star, "'*'")?;
            Some(s)
        };
        let m = self.matrix_lit(at)?;
        Ok(match factor {
            Some(s) => m.scale(s),
            None => m,
        })
    }

    fn matrix_lit(&mut self, at: (usize, usize)) -> Result<Matrix> {
        self.expect(Tok::LBrack, "'['")?;
        let mut rows: Vec<Vec<C64>> = Vec::new();
        loop {
            self.expect(Tok::LBrack, "'['")?;
            let mut row = vec![self.scalar()?];
            while *self.peek() == Tok::Comma {
                self.next();
                row.push(self.scalar()?);
            }
            self.expect(Tok::RBrack, "']'")?;
            rows.push(row);
            if *self.peek() == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrack, "']'")?;
        if rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(self.err_at(at, "ragged matrix literal"));
        }
        Ok(Matrix::from_rows(&rows))
    }

    fn at_stmts_end(&self) -> bool {
        matches!(self.peek(), Tok::Eof | Tok::Fi | Tok::Od | Tok::Box)
    }

    fn stmts(&mut self) -> Result<Stmt> {
        let mut parts = vec![self.stmt()?];
        while *self.peek() == Tok::Semi {
            self.next();
            if self.at_stmts_end() {
                break;
            }
            parts.push(self.stmt()?);
        }
        Ok(Stmt::seq(parts))
    }

    fn dim(&self, q: &str) -> usize {
        self.decls.iter().find(|r| r.name == q).map_or(2, |r| r.dim)
    }

    fn reg_list(&mut self) -> Result<Vec<String>> {
        let mut v = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.next();
            v.push(self.ident()?);
        }
        Ok(v)
    }

    fn guard(&mut self) -> Result<(Measurement, Vec<String>)> {
        let at = self.here();
        let name = self.ident()?;
        self.expect(Tok::LBrack, "'['")?;
        let regs = self.reg_list()?;
        self.expect(Tok::RBrack, "']'")?;
        let dims: Vec<usize> = regs.iter().map(|q| self.dim(q)).collect();
        let meas = match self.lets.get(&name) {
            Some(Value::Meas(outs)) => Measurement::new(name.clone(), outs.clone()),
            Some(_) => return Err(self.err_at(at, format!("{name} is not a measurement"))),
            None => builtins::measurement(&name, &dims)
                .ok_or_else(|| self.err_at(at, format!("unknown measurement {name}")))?,
        };
        Ok((meas, regs))
    }

    fn stmt(&mut self) -> Result<Stmt> {
        let at = self.here();
        match self.peek().clone() {
            Tok::Skip => {
                self.positions.push(at);
                self.next();
                Ok(Stmt::Skip)
            }
            Tok::Trout => {
                self.positions.push(at);
                self.next();
                Ok(Stmt::TraceOut(self.ident()?))
            }
            Tok::If => {
                self.positions.push(at);
                self.next();
                let (meas, regs) = self.guard()?;
                self.expect(Tok::Eq, "'='")?;
                let mut arms: Vec<(String, (usize, usize), Stmt)> = Vec::new();
                loop {
                    let lat = self.here();
                    let l = self.label()?;
                    self.expect(Tok::Arrow, "'->'")?;
                    let body = self.stmts()?;
                    arms.push((l, lat, body));
                    if *self.peek() == Tok::Box {
                        self.next();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::Fi, "'fi'")?;
                let mut branches = Vec::with_capacity(meas.outcomes.len());
                for (l, _) in &meas.outcomes {
                    let n = arms.iter().filter(|a| &a.0 == l).count();
                    if n != 1 {
                        return Err(self.err_at(at, format!("outcome {l} of {} needs exactly one branch", meas.name)));
                    }
                }
                for (l, lat, _) in &arms {
                    if meas.operator(l).is_none() {
                        return Err(self.err_at(*lat, format!("{} has no outcome {l}", meas.name)));
                    }
                }
                // Branches are stored in measurement order; positions were
                // recorded in source order, so reorder them to match.
                let order: Vec<usize> =
                    meas.outcomes.iter().map(|(l, _)| arms.iter().position(|a| &a.0 == l).expect("checked")).collect();
                self.reorder_positions(&arms, &order);
                let mut slots: Vec<Option<Stmt>> = arms.into_iter().map(|a| Some(a.2)).collect();
                for k in order {
                    branches.push(slots[k].take().expect("each arm once"));
                }
                Ok(Stmt::IfMeas { regs, meas, branches })
            }
            Tok::While => {
                self.positions.push(at);
                self.next();
                let (meas, regs) = self.guard()?;
                self.expect(Tok::Eq, "'='")?;
                let lat = self.here();
                let l = self.label()?;
                if l != "1" {
                    return Err(self.err_at(lat, "loop guard must test outcome 1"));
                }
                self.expect(Tok::Do, "'do'")?;
                let body = self.stmts()?;
                self.expect(Tok::Od, "'od'")?;
                Ok(Stmt::WhileMeas { regs, meas, body: Box::new(body) })
            }
            Tok::Ident(_) => {
                self.positions.push(at);
                let outs = self.reg_list()?;
                self.expect(Tok::Assign, "':='")?;
                match self.peek().clone() {
                    Tok::Ket(k) => {
                        self.next();
                        if k != "0" {
                            return Err(self.err_at(at, "only |0> initialization is supported"));
                        }
                        if outs.len() != 1 {
                            return Err(self.err_at(at, "initialize one register at a time"));
                        }
                        Ok(Stmt::Init(outs.into_iter().next().expect("one")))
                    }
                    Tok::Ident(name) => {
                        self.next();
                        let ins = match self.peek() {
                            Tok::Box => {
                                self.next();
                                Vec::new()
                            }
                            _ => {
                                self.expect(Tok::LBrack, "'['")?;
                                let v = self.reg_list()?;
                                self.expect(Tok::RBrack, "']'")?;
                                v
                            }
                        };
                        self.application(at, name, outs, ins)
                    }
                    _ => Err(self.err("expected |0> or an operator application")),
                }
            }
            _ => Err(self.err("expected statement")),
        }
    }

    fn application(&self, at: (usize, usize), name: String, outs: Vec<String>, ins: Vec<String>) -> Result<Stmt> {
        let total = |v: &[String]| v.iter().map(|q| self.dim(q)).product::<usize>();
        let gate = |m: Matrix| -> Result<Stmt> {
            if outs != ins {
                return Err(self.err_at(at, format!("gate {name} must write back to the registers it reads")));
            }
            Ok(Stmt::Unitary { regs: ins.clone(), gate: Gate { name: name.clone(), matrix: m } })
        };
        match self.lets.get(&name) {
            Some(Value::Matrix(m)) => gate(m.clone()),
            Some(Value::Kraus(ks)) => Ok(Stmt::ApplySuper {
                inputs: ins.clone(),
                outputs: outs.clone(),
                channel: Channel { name: name.clone(), kraus: ks.clone() },
            }),
            Some(Value::Meas(_)) => Err(self.err_at(at, format!("{name} is a measurement, not an operator"))),
            None if builtins::is_gate_name(&name) => {
                let d = total(&ins);
                let g = builtins::gate(&name, d)
                    .ok_or_else(|| self.err_at(at, format!("gate {name} does not act on dimension {d}")))?;
                gate(g.matrix)
            }
            None if builtins::is_channel_name(&name) => {
                let ch = builtins::channel(&name, total(&ins), total(&outs)).expect("builtin channel");
                Ok(Stmt::ApplySuper { inputs: ins.clone(), outputs: outs.clone(), channel: ch })
            }
            None => Err(self.err_at(at, format!("unknown operator {name}"))),
        }
    }

    /// Rewrites the pre-order position table after branches are reordered.
    fn reorder_positions(&mut self, arms: &[(String, (usize, usize), Stmt)], order: &[usize]) {
        let sizes: Vec<usize> = arms.iter().map(|a| count_nodes(&a.2)).collect();
        let total: usize = sizes.iter().sum();
        let start = self.positions.len() - total;
        let tail = self.positions.split_off(start);
        let mut offs = vec![0; sizes.len()];
        for k in 1..sizes.len() {
            offs[k] = offs[k - 1] + sizes[k - 1];
        }
        for &k in order {
            self.positions.extend_from_slice(&tail[offs[k]..offs[k] + sizes[k]]);
        }
    }
}

fn count_nodes(s: &Stmt) -> usize {
    match s {
        Stmt::Seq(v) => v.iter().map(count_nodes).sum(),
        Stmt::IfMeas { branches, .. } => 1 + branches.iter().map(count_nodes).sum::<usize>(),
        Stmt::WhileMeas { body, .. } => 1 + count_nodes(body),
        _ => 1,
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier {s}"),
        Tok::Num(_, raw) => format!("number {raw}"),
        Tok::Ket(k) => format!("|{k}>"),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}").to_lowercase(),
    }
}
