//! Lowers a program to a tree of operators on the live register space.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::lang::{Program, Stmt};
use crate::linalg::{embed, embed_map, Matrix, Shape, ONE};

use super::superop;

/// Operators act on the tensor product of the live registers, in table
/// order. `Kraus` covers init, unitaries, superoperators and trace-out.
#[derive(Debug)]
pub enum Node {
    Skip { dim: usize },
    Kraus { ops: Vec<Matrix>, d_in: usize, d_out: usize },
    Seq(Vec<Arc<Node>>),
    Branch { labels: Vec<String>, ops: Vec<Matrix>, branches: Vec<Arc<Node>> },
    Loop { m0: Matrix, m1: Matrix, body: Arc<Node>, closed: OnceLock<std::result::Result<Matrix, Error>> },
}

impl Node {
    pub fn d_in(&self) -> usize {
        match self {
            Node::Skip { dim } => *dim,
            Node::Kraus { d_in, .. } => *d_in,
            Node::Seq(v) => v.first().map_or(1, |n| n.d_in()),
            Node::Branch { ops, .. } => ops[0].cols(),
            Node::Loop { m0, .. } => m0.cols(),
        }
    }

    pub fn d_out(&self) -> usize {
        match self {
            Node::Skip { dim } => *dim,
            Node::Kraus { d_out, .. } => *d_out,
            Node::Seq(v) => v.last().map_or(1, |n| n.d_out()),
            Node::Branch { branches, .. } => branches[0].d_out(),
            Node::Loop { m0, .. } => m0.rows(),
        }
    }

    /// Applies the node's semantic function to an operator (not necessarily
    /// Hermitian; the map is linear).
    pub fn apply(&self, rho: &Matrix) -> Result<Matrix> {
        if rho.dims() != (self.d_in(), self.d_in()) {
            return Err(Error::dim(format!("state is {:?}, program acts on dimension {}", rho.dims(), self.d_in())));
        }
        match self {
            Node::Skip { .. } => Ok(rho.clone()),
            Node::Kraus { ops, d_out, .. } => {
                let mut out = Matrix::zeros(*d_out, *d_out);
                for k in ops {
                    out = &out + &k.sandwich(rho);
                }
                Ok(out)
            }
            Node::Seq(v) => {
                let mut s = rho.clone();
                for n in v {
                    s = n.apply(&s)?;
                }
                Ok(s)
            }
            Node::Branch { ops, branches, .. } => {
                let mut out: Option<Matrix> = None;
                for (m, b) in ops.iter().zip(branches) {
                    let r = b.apply(&m.sandwich(rho))?;
                    out = Some(match out {
                        None => r,
                        Some(o) => &o + &r,
                    });
                }
                Ok(out.expect("at least one branch"))
            }
            Node::Loop { m0, .. } => {
                let a = self.loop_superop()?;
                crate::linalg::apply_superop(a, rho, m0.rows())
            }
        }
    }

    /// Vectorized superoperator of the loop, computed once.
    pub fn loop_superop(&self) -> Result<&Matrix> {
        match self {
            Node::Loop { m0, m1, body, closed } => {
                closed.get_or_init(|| superop::loop_matrix(m0, m1, body)).as_ref().map_err(Clone::clone)
            }
            _ => Err(Error::Invalid("not a loop".into())),
        }
    }
}

struct Ctx<'a> {
    prog: &'a Program,
}

impl Ctx<'_> {
    fn shape(&self, live: &[String]) -> Shape {
        self.prog.shape_of(live)
    }

    fn positions(live: &[String], regs: &[String]) -> Vec<usize> {
        regs.iter().map(|q| live.iter().position(|x| x == q).expect("liveness checked")).collect()
    }

    fn compile(&self, s: &Stmt, live: &mut Vec<String>) -> Result<Arc<Node>> {
        let shape = self.shape(live);
        let dim = shape.total();
        Ok(Arc::new(match s {
            Stmt::Skip => Node::Skip { dim },
            Stmt::Seq(v) => {
                let mut parts = Vec::with_capacity(v.len());
                for x in v {
                    parts.push(self.compile(x, live)?);
                }
                Node::Seq(parts)
            }
            Stmt::Init(q) => {
                let d = self.prog.dim_of(q).expect("declared");
                let pos = Self::positions(live, std::slice::from_ref(q));
                let ops = (0..d)
                    .map(|i| {
                        let mut k = Matrix::zeros(d, d);
                        k[(0, i)] = ONE;
                        embed(&k, &shape, &pos)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Node::Kraus { ops, d_in: dim, d_out: dim }
            }
            Stmt::Unitary { regs, gate } => {
                let pos = Self::positions(live, regs);
                Node::Kraus { ops: vec![embed(&gate.matrix, &shape, &pos)?], d_in: dim, d_out: dim }
            }
            Stmt::TraceOut(q) => {
                let d = self.prog.dim_of(q).expect("declared");
                let pos = Self::positions(live, std::slice::from_ref(q));
                live.retain(|x| x != q);
                let out_shape = self.shape(live);
                let ops = (0..d)
                    .map(|i| {
                        let mut k = Matrix::zeros(1, d);
                        k[(0, i)] = ONE;
                        embed_map(&k, &shape, &pos, &out_shape, &[])
                    })
                    .collect::<Result<Vec<_>>>()?;
                Node::Kraus { ops, d_in: dim, d_out: out_shape.total() }
            }
            Stmt::ApplySuper { inputs, outputs, channel } => {
                let in_pos = Self::positions(live, inputs);
                live.retain(|x| !inputs.contains(x));
                let mut set: std::collections::BTreeSet<String> = live.iter().cloned().collect();
                set.extend(outputs.iter().cloned());
                *live = self.prog.ordered(&set);
                let out_shape = self.shape(live);
                let out_pos = Self::positions(live, outputs);
                let ops = channel
                    .kraus
                    .iter()
                    .map(|k| embed_map(k, &shape, &in_pos, &out_shape, &out_pos))
                    .collect::<Result<Vec<_>>>()?;
                Node::Kraus { ops, d_in: dim, d_out: out_shape.total() }
            }
            Stmt::IfMeas { regs, meas, branches } => {
                let pos = Self::positions(live, regs);
                let ops = meas.outcomes.iter().map(|(_, m)| embed(m, &shape, &pos)).collect::<Result<Vec<_>>>()?;
                let start = live.clone();
                let mut nodes = Vec::with_capacity(branches.len());
                for b in branches {
                    *live = start.clone();
                    nodes.push(self.compile(b, live)?);
                }
                Node::Branch { labels: meas.labels().iter().map(|l| l.to_string()).collect(), ops, branches: nodes }
            }
            Stmt::WhileMeas { regs, meas, body } => {
                let pos = Self::positions(live, regs);
                let m0 = embed(meas.operator("0").expect("binary"), &shape, &pos)?;
                let m1 = embed(meas.operator("1").expect("binary"), &shape, &pos)?;
                let b = self.compile(body, live)?;
                Node::Loop { m0, m1, body: b, closed: OnceLock::new() }
            }
        }))
    }
}

/// Compiles a whole program; the root acts from the input space to the
/// output space of `p`.
pub fn compile(p: &Program) -> Result<Arc<Node>> {
    let mut live = p.inputs().to_vec();
    let node = Ctx { prog: p }.compile(&p.body, &mut live)?;
    debug_assert_eq!(live, p.outputs());
    Ok(node)
}
