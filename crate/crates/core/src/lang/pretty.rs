use std::fmt::Write as _;

use super::ast::{Program, Register, Stmt};
use super::builtins;
use crate::linalg::{Matrix, C64};

fn num(z: C64) -> String {
    if z.im == 0.0 {
        format!("{:?}", z.re)
    } else if z.re == 0.0 {
        format!("{:?}i", z.im)
    } else {
        let sign = if z.im.is_sign_negative() { "" } else { "+" };
        format!("{:?}{sign}{:?}i", z.re, z.im)
    }
}

pub fn matrix_literal(m: &Matrix) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let cells: Vec<String> = (0..m.cols()).map(|j| num(m[(i, j)])).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

struct Printer<'a> {
    prog: &'a Program,
    lets: Vec<(String, String)>,
}

impl Printer<'_> {
    fn dims(&self, regs: &[String]) -> Vec<usize> {
        regs.iter().map(|q| self.prog.dim_of(q).unwrap_or(2)).collect()
    }

    fn bind(&mut self, name: &str, text: String) {
        if !self.lets.iter().any(|(n, _)| n == name) {
            self.lets.push((name.to_string(), text));
        }
    }

    fn stmt(&mut self, s: &Stmt, out: &mut String) {
        match s {
            Stmt::Skip => out.push_str("skip"),
            Stmt::Seq(v) => {
                for (k, x) in v.iter().enumerate() {
                    if k > 0 {
                        out.push_str("; ");
                    }
                    self.stmt(x, out);
                }
            }
            Stmt::Init(q) => {
                let _ = write!(out, "{q} := |0>");
            }
            Stmt::TraceOut(q) => {
                let _ = write!(out, "trout {q}");
            }
            Stmt::Unitary { regs, gate } => {
                let d: usize = self.dims(regs).iter().product();
                let builtin = builtins::gate(&gate.name, d).is_some_and(|g| g.matrix == gate.matrix);
                if !builtin {
                    self.bind(&gate.name, matrix_literal(&gate.matrix));
                }
                let r = regs.join(", ");
                let _ = write!(out, "{r} := {}[{r}]", gate.name);
            }
            Stmt::ApplySuper { inputs, outputs, channel } => {
                let di: usize = self.dims(inputs).iter().product();
                let dout: usize = self.dims(outputs).iter().product();
                let builtin = builtins::channel(&channel.name, di, dout).is_some_and(|c| c.kraus == channel.kraus);
                if !builtin {
                    let ks: Vec<String> = channel.kraus.iter().map(matrix_literal).collect();
                    self.bind(&channel.name, format!("kraus {{ {} }}", ks.join(", ")));
                }
                let args = if inputs.is_empty() { "[]".to_string() } else { format!("[{}]", inputs.join(", ")) };
                let _ = write!(out, "{} := {}{args}", outputs.join(", "), channel.name);
            }
            Stmt::IfMeas { regs, meas, branches } => {
                self.meas(regs, meas);
                let _ = write!(out, "if {}[{}] = ", meas.name, regs.join(", "));
                for (k, ((l, _), b)) in meas.outcomes.iter().zip(branches).enumerate() {
                    if k > 0 {
                        out.push_str(" [] ");
                    }
                    let _ = write!(out, "{l} -> ");
                    self.stmt(b, out);
                }
                out.push_str(" fi");
            }
            Stmt::WhileMeas { regs, meas, body } => {
                self.meas(regs, meas);
                let _ = write!(out, "while {}[{}] = 1 do ", meas.name, regs.join(", "));
                self.stmt(body, out);
                out.push_str(" od");
            }
        }
    }

    fn meas(&mut self, regs: &[String], meas: &super::ast::Measurement) {
        let dims = self.dims(regs);
        if builtins::measurement(&meas.name, &dims).is_some_and(|m| m == *meas) {
            return;
        }
        let parts: Vec<String> = meas.outcomes.iter().map(|(l, m)| format!("{l}: {}", matrix_literal(m))).collect();
        self.bind(&meas.name, format!("meas {{ {} }}", parts.join(", ")));
    }
}

/// Registers in order of first appearance, as the parser would build the
/// table when no declarations are given.
fn implicit_table(body: &Stmt) -> Vec<String> {
    fn walk(s: &Stmt, out: &mut Vec<String>) {
        let mut add = |q: &String| {
            if !out.contains(q) {
                out.push(q.clone());
            }
        };
        match s {
            Stmt::Skip => {}
            Stmt::Seq(v) => v.iter().for_each(|x| walk(x, out)),
            Stmt::Init(q) | Stmt::TraceOut(q) => add(q),
            Stmt::Unitary { regs, .. } => regs.iter().for_each(add),
            Stmt::IfMeas { regs, branches, .. } => {
                regs.iter().for_each(add);
                branches.iter().for_each(|b| walk(b, out));
            }
            Stmt::WhileMeas { regs, body, .. } => {
                regs.iter().for_each(add);
                walk(body, out);
            }
            Stmt::ApplySuper { inputs, outputs, .. } => {
                inputs.iter().for_each(&mut add);
                outputs.iter().for_each(add);
            }
        }
    }
    let mut v = Vec::new();
    walk(body, &mut v);
    v
}

/// Program text that parses back to an equal program.
pub fn pretty(p: &Program) -> String {
    let mut pr = Printer { prog: p, lets: Vec::new() };
    let mut body = String::new();
    pr.stmt(&p.body, &mut body);
    let mut out = String::new();
    let implicit = implicit_table(&p.body);
    let needs_vars = p.registers.iter().any(|r| r.dim != 2)
        || implicit.len() != p.registers.len()
        || implicit.iter().zip(&p.registers).any(|(a, r)| *a != r.name);
    if needs_vars {
        let decls: Vec<String> = p.registers.iter().map(|Register { name, dim }| format!("{name} : {dim}")).collect();
        let _ = writeln!(out, "var {};", decls.join(", "));
    }
    for (n, v) in &pr.lets {
        let _ = writeln!(out, "let {n} = {v};");
    }
    out.push_str(&body);
    out
}

/// The statements of a program on one line, without declarations.
pub fn pretty_body(p: &Program) -> String {
    let mut pr = Printer { prog: p, lets: Vec::new() };
    let mut body = String::new();
    pr.stmt(&p.body, &mut body);
    body.split_whitespace().collect::<Vec<_>>().join(" ")
}
