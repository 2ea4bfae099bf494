//! Weakest liberal preconditions for single programs, with loop invariants
//! supplied by the caller.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::judgment::MeasSpec;
use crate::lang::{pretty_body, Program, Stmt};
use crate::linalg::{apply_kraus_dual, min_eigenvalue, Matrix};
use crate::semantics::denote;

use super::derivation::{Discharge, Obligation, ObligationKind, MATCH_TOL};

#[derive(Clone, Debug, Serialize)]
pub struct QpdReport {
    pub pre: Matrix,
    pub obligations: Vec<Obligation>,
}

impl QpdReport {
    pub fn valid(&self) -> bool {
        self.obligations.iter().all(|o| o.passed)
    }
}

/// Precondition of {A} P {post}, built with (Ax.Sk), (Ax.Init), (Ax.UT),
/// (R.SC), (R.IF) and (R.LP). Loops consume `invariants` in program order;
/// each one yields the obligation B ⊑ pre(body, M₀†AM₀ + M₁†BM₁).
pub fn qpd_wp(p: &Program, post: &Matrix, invariants: &[Matrix]) -> Result<QpdReport> {
    let d = p.output_dim();
    if post.dims() != (d, d) {
        return Err(Error::dim(format!("postcondition is {:?}, program outputs have dimension {d}", post.dims())));
    }
    let mut w = Wp { table: p, invariants, next: 0, obligations: Vec::new() };
    let pre = w.stmt(&p.body, p.inputs(), post)?;
    if w.next != invariants.len() {
        return Err(Error::Invalid(format!("{} invariants given for {} loops", invariants.len(), w.next)));
    }
    Ok(QpdReport { pre, obligations: w.obligations })
}

struct Wp<'a> {
    table: &'a Program,
    invariants: &'a [Matrix],
    next: usize,
    obligations: Vec<Obligation>,
}

impl Wp<'_> {
    fn fragment(&self, s: &Stmt, live: &[String]) -> Result<Program> {
        self.table.with_body(s.clone())?.restrict(live)
    }

    fn stmt(&mut self, s: &Stmt, live: &[String], post: &Matrix) -> Result<Matrix> {
        match s {
            Stmt::Skip => Ok(post.clone()),
            Stmt::Seq(items) => {
                let mut lives = vec![live.to_vec()];
                for it in items {
                    let f = self.fragment(it, lives.last().expect("nonempty"))?;
                    lives.push(f.outputs().to_vec());
                }
                // Loops are numbered in program order, so walk them forward
                // by reserving their slots first.
                let first = self.next;
                let counts: Vec<usize> = items.iter().map(count_loops).collect();
                let mut acc = post.clone();
                for (k, it) in items.iter().enumerate().rev() {
                    self.next = first + counts[..k].iter().sum::<usize>();
                    acc = self.stmt(it, &lives[k], &acc)?;
                }
                self.next = first + counts.iter().sum::<usize>();
                Ok(acc)
            }
            Stmt::Init(_) | Stmt::Unitary { .. } | Stmt::ApplySuper { .. } | Stmt::TraceOut(_) => {
                let f = self.fragment(s, live)?;
                Ok(apply_kraus_dual(&denote(&f)?.kraus_ops()?, post)?.hermitian_part())
            }
            Stmt::IfMeas { regs, meas, branches } => {
                let f = self.fragment(s, live)?;
                let m = MeasSpec::on_inputs(&f, meas, regs)?;
                let mut acc = Matrix::zeros(post.rows(), post.rows());
                for (k, b) in m.ops.iter().zip(branches) {
                    let a = self.stmt(b, live, post)?;
                    acc = &acc + &k.sandwich_dual(&a);
                }
                Ok(acc.hermitian_part())
            }
            Stmt::WhileMeas { regs, meas, body } => {
                let f = self.fragment(s, live)?;
                let m = MeasSpec::on_inputs(&f, meas, regs)?;
                let b = self
                    .invariants
                    .get(self.next)
                    .cloned()
                    .ok_or_else(|| Error::Invalid("missing loop invariant".into()))?;
                self.next += 1;
                if b.dims() != post.dims() {
                    return Err(Error::dim("loop invariant does not match the loop's registers"));
                }
                let inv = (&m.ops[0].sandwich_dual(post) + &m.ops[1].sandwich_dual(&b)).hermitian_part();
                let wb = self.stmt(body, live, &inv)?;
                let gap = min_eigenvalue(&(&wb - &b))?;
                self.obligations.push(Obligation {
                    kind: ObligationKind::Invariant,
                    description: format!("invariant of {} is preserved by the body", pretty_body(&f)),
                    discharge: Discharge::Analytic,
                    passed: gap >= -MATCH_TOL,
                    residual: (-gap).max(0.0),
                    samples: None,
                });
                Ok(inv)
            }
        }
    }
}

fn count_loops(s: &Stmt) -> usize {
    match s {
        Stmt::Seq(v) => v.iter().map(count_loops).sum(),
        Stmt::IfMeas { branches, .. } => branches.iter().map(count_loops).sum(),
        Stmt::WhileMeas { body, .. } => 1 + count_loops(body),
        _ => 0,
    }
}
