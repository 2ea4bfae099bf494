//! Linear constraints on input pairs under which two programs generate the
//! same probabilistic branching tree of measurement outcomes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::judgment::MeasSpec;
use crate::lang::{Program, Stmt};
use crate::linalg::{apply_kraus_dual, Matrix};
use crate::semantics::denote;

/// Pairs closer than this (relative to their norm) to the span of the pairs
/// already kept are dropped.
pub const DEDUP_TOL: f64 = 1e-10;

/// Tolerance of `check_comparability`.
pub const COMPARABILITY_TOL: f64 = 1e-8;

/// Constraints tr(Aᵢρ₁) = tr(Bᵢρ₂).
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintSet {
    pub pairs: Vec<(Matrix, Matrix)>,
    pub d1: usize,
    pub d2: usize,
}

impl ConstraintSet {
    pub fn seed(d1: usize, d2: usize) -> ConstraintSet {
        ConstraintSet { pairs: vec![(Matrix::identity(d1), Matrix::identity(d2))], d1, d2 }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Largest |tr(Aᵢρ₁) − tr(Bᵢρ₂)|.
    pub fn max_defect(&self, rho1: &Matrix, rho2: &Matrix) -> Result<f64> {
        if rho1.dims() != (self.d1, self.d1) || rho2.dims() != (self.d2, self.d2) {
            return Err(Error::dim(format!(
                "states {:?}, {:?} for constraint spaces {} and {}",
                rho1.dims(),
                rho2.dims(),
                self.d1,
                self.d2
            )));
        }
        Ok(self.pairs.iter().map(|(a, b)| (a.expect(rho1) - b.expect(rho2)).abs()).fold(0.0, f64::max))
    }
}

/// Number of loop powers j = 0, …, d₁²+d₂²+1 added per while-step.
pub fn loop_powers(d1: usize, d2: usize) -> usize {
    d1 * d1 + d2 * d2 + 2
}

/// Runs the backward constraint collection over two programs made of
/// aligned if- and while-statements.
pub fn collect_constraints(p1: &Program, p2: &Program) -> Result<ConstraintSet> {
    let s1 = p1.body.items();
    let s2 = p2.body.items();
    let s1: Vec<&Stmt> = s1.iter().filter(|s| **s != Stmt::Skip).collect();
    let s2: Vec<&Stmt> = s2.iter().filter(|s| **s != Stmt::Skip).collect();
    if s1.len() != s2.len() {
        return Err(Error::Unsupported(format!(
            "programs have {} and {} top-level statements; they must align",
            s1.len(),
            s2.len()
        )));
    }
    let f1 = fragments(p1, &s1)?;
    let f2 = fragments(p2, &s2)?;
    let mut c = ConstraintSet::seed(p1.output_dim(), p2.output_dim());
    for (a, b) in f1.iter().zip(&f2).rev() {
        c = step(a, b, &c)?;
    }
    Ok(c)
}

/// Top-level statements as programs over the registers live before them.
fn fragments(p: &Program, items: &[&Stmt]) -> Result<Vec<Program>> {
    let mut live = p.inputs().to_vec();
    let mut out = Vec::new();
    for s in items {
        let f = p.with_body((*s).clone())?.restrict(&live)?;
        live = f.outputs().to_vec();
        out.push(f);
    }
    Ok(out)
}

fn dual_of(p: &Program, body: &Stmt, a: &Matrix) -> Result<Matrix> {
    let f = p.with_body(body.clone())?.restrict(p.inputs())?;
    Ok(apply_kraus_dual(&denote(&f)?.kraus_ops()?, a)?.hermitian_part())
}

fn step(f1: &Program, f2: &Program, c: &ConstraintSet) -> Result<ConstraintSet> {
    let mut d = Dedup::default();
    match (&f1.body, &f2.body) {
        (
            Stmt::IfMeas { regs: r1, meas: m1, branches: b1 },
            Stmt::IfMeas { regs: r2, meas: m2, branches: b2 },
        ) => {
            if b1.len() != b2.len() {
                return Err(Error::Unsupported("aligned case statements need equally many branches".into()));
            }
            let m = MeasSpec::on_inputs(f1, m1, r1)?;
            let n = MeasSpec::on_inputs(f2, m2, r2)?;
            for j in 0..b1.len() {
                let (mj, nj) = (&m.ops[j], &n.ops[j]);
                d.push(mj.sandwich_dual(&Matrix::identity(mj.rows())), nj.sandwich_dual(&Matrix::identity(nj.rows())));
                for (a, b) in &c.pairs {
                    let pa = dual_of(f1, &b1[j], a)?;
                    let qb = dual_of(f2, &b2[j], b)?;
                    d.push(mj.sandwich_dual(&pa), nj.sandwich_dual(&qb));
                }
            }
        }
        (
            Stmt::WhileMeas { regs: r1, meas: m1, body: p },
            Stmt::WhileMeas { regs: r2, meas: m2, body: q },
        ) => {
            let m = MeasSpec::on_inputs(f1, m1, r1)?;
            let n = MeasSpec::on_inputs(f2, m2, r2)?;
            let ea = |x: &Matrix| -> Result<Matrix> { Ok(m.ops[1].sandwich_dual(&dual_of(f1, p, x)?)) };
            let fa = |x: &Matrix| -> Result<Matrix> { Ok(n.ops[1].sandwich_dual(&dual_of(f2, q, x)?)) };
            let mut cur: Vec<(Matrix, Matrix)> = vec![(
                m.ops[0].sandwich_dual(&Matrix::identity(f1.input_dim())),
                n.ops[0].sandwich_dual(&Matrix::identity(f2.input_dim())),
            )];
            cur.extend(c.pairs.iter().map(|(a, b)| (m.ops[0].sandwich_dual(a), n.ops[0].sandwich_dual(b))));
            for j in 0..loop_powers(f1.input_dim(), f2.input_dim()) {
                if j > 0 {
                    cur = cur.iter().map(|(a, b)| Ok((ea(a)?, fa(b)?))).collect::<Result<_>>()?;
                }
                for (a, b) in &cur {
                    d.push(a.clone(), b.clone());
                }
            }
        }
        _ => {
            return Err(Error::Unsupported(
                "aligned statements must both be case statements or both be loops".into(),
            ))
        }
    }
    Ok(ConstraintSet { pairs: d.kept, d1: f1.input_dim(), d2: f2.input_dim() })
}

/// Gram-Schmidt over pairs, as real vectors of Hermitian coordinates.
#[derive(Default)]
struct Dedup {
    basis: Vec<Vec<f64>>,
    kept: Vec<(Matrix, Matrix)>,
}

impl Dedup {
    fn coords(a: &Matrix, b: &Matrix) -> Vec<f64> {
        a.data().iter().chain(b.data()).flat_map(|z| [z.re, z.im]).collect()
    }

    fn push(&mut self, a: Matrix, b: Matrix) {
        let (a, b) = (a.hermitian_part(), b.hermitian_part());
        let v = Self::coords(&a, &b);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= DEDUP_TOL {
            return;
        }
        let mut r: Vec<f64> = v.iter().map(|x| x / norm).collect();
        for _ in 0..2 {
            for q in &self.basis {
                let t: f64 = q.iter().zip(&r).map(|(x, y)| x * y).sum();
                r.iter_mut().zip(q).for_each(|(x, y)| *x -= t * y);
            }
        }
        let rn = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if rn <= DEDUP_TOL {
            return;
        }
        self.basis.push(r.iter().map(|x| x / rn).collect());
        self.kept.push((a.scale_re(1.0 / norm), b.scale_re(1.0 / norm)));
    }
}

/// Whether (ρ₁, ρ₂) satisfies every constraint within 1e−8.
pub fn check_comparability(c: &ConstraintSet, rho1: &Matrix, rho2: &Matrix) -> Result<bool> {
    Ok(c.max_defect(rho1, rho2)? <= COMPARABILITY_TOL)
}
