//! Small-step operational semantics on compiled programs.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lang::Program;
use crate::linalg::Matrix;

use super::compile::{compile, Node};

/// Branches lighter than this are dropped during tree expansion.
pub const PRUNE_WEIGHT: f64 = 1e-12;

/// ⟨remaining statements, unnormalized state⟩; terminated when nothing
/// remains.
#[derive(Clone, Debug)]
pub struct Configuration {
    remaining: Vec<Arc<Node>>,
    pub state: Matrix,
}

impl Configuration {
    pub fn initial(p: &Program, rho: &Matrix) -> Result<Configuration> {
        if rho.dims() != (p.input_dim(), p.input_dim()) {
            return Err(Error::dim(format!("state {:?} for input dimension {}", rho.dims(), p.input_dim())));
        }
        let node = compile(p)?;
        Ok(Configuration { remaining: vec![node], state: rho.clone() })
    }

    pub fn is_terminated(&self) -> bool {
        self.remaining.is_empty()
    }

    pub fn weight(&self) -> f64 {
        self.state.trace().re
    }

    /// Pops sequence nodes so the head is an atomic or control statement.
    fn normalize(mut self) -> Configuration {
        while let Some(top) = self.remaining.last() {
            if let Node::Seq(v) = top.as_ref() {
                let v = v.clone();
                self.remaining.pop();
                self.remaining.extend(v.into_iter().rev());
            } else {
                break;
            }
        }
        self
    }

    /// One transition. Returns the successors with their outcome labels
    /// (empty for deterministic steps).
    pub fn step(&self) -> Vec<(String, Configuration)> {
        let c = self.clone().normalize();
        let mut rest = c.remaining.clone();
        let head = match rest.pop() {
            Some(h) => h,
            None => return vec![],
        };
        let next = |rest: &Vec<Arc<Node>>, extra: &[Arc<Node>], state: Matrix| {
            let mut r = rest.clone();
            r.extend(extra.iter().rev().cloned());
            Configuration { remaining: r, state }.normalize()
        };
        match head.as_ref() {
            Node::Skip { .. } => vec![(String::new(), next(&rest, &[], c.state))],
            Node::Kraus { .. } => {
                let s = head.apply(&c.state).expect("compiled shapes agree");
                vec![(String::new(), next(&rest, &[], s))]
            }
            Node::Seq(_) => unreachable!("normalized"),
            Node::Branch { labels, ops, branches } => labels
                .iter()
                .zip(ops)
                .zip(branches)
                .map(|((l, m), b)| (l.clone(), next(&rest, &[b.clone()], m.sandwich(&c.state))))
                .collect(),
            Node::Loop { m0, m1, body, .. } => vec![
                ("0".to_string(), next(&rest, &[], m0.sandwich(&c.state))),
                ("1".to_string(), next(&rest, &[body.clone(), head.clone()], m1.sandwich(&c.state))),
            ],
        }
    }
}

/// Probabilistic branching tree of configurations.
#[derive(Clone, Debug)]
pub struct BranchTree {
    pub config: Configuration,
    pub children: Vec<(String, BranchTree)>,
}

impl BranchTree {
    /// Expands up to `depth` transitions, pruning light branches.
    pub fn expand(config: Configuration, depth: usize) -> BranchTree {
        if depth == 0 || config.is_terminated() {
            return BranchTree { config, children: vec![] };
        }
        let children = config
            .step()
            .into_iter()
            .filter(|(_, c)| c.weight() >= PRUNE_WEIGHT)
            .map(|(l, c)| (l, BranchTree::expand(c, depth - 1)))
            .collect();
        BranchTree { config, children }
    }

    /// Sum of the states at terminated leaves.
    pub fn terminated_sum(&self) -> Matrix {
        let mut acc: Option<Matrix> = None;
        self.fold_leaves(&mut |c| {
            if c.is_terminated() {
                acc = Some(match acc.take() {
                    None => c.state.clone(),
                    Some(a) => &a + &c.state,
                });
            }
        });
        acc.unwrap_or_else(|| Matrix::zeros(0, 0))
    }

    fn fold_leaves(&self, f: &mut impl FnMut(&Configuration)) {
        if self.children.is_empty() {
            f(&self.config);
        }
        for (_, c) in &self.children {
            c.fold_leaves(f);
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|(_, c)| c.size()).sum::<usize>()
    }

    pub fn to_report(&self) -> TreeReport {
        TreeReport {
            weight: self.config.weight(),
            terminated: self.config.is_terminated(),
            children: self.children.iter().map(|(l, c)| (l.clone(), c.to_report())).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeReport {
    pub weight: f64,
    pub terminated: bool,
    pub children: Vec<(String, TreeReport)>,
}

/// Weights of measurement-outcome paths, up to `max_events` measurements
/// deep. Deterministic steps do not extend the path.
pub fn outcome_profile(p: &Program, rho: &Matrix, max_events: usize) -> Result<BTreeMap<Vec<String>, f64>> {
    let mut out = BTreeMap::new();
    let c = Configuration::initial(p, rho)?;
    profile(c, Vec::new(), max_events, &mut out);
    Ok(out)
}

fn profile(c: Configuration, path: Vec<String>, budget: usize, out: &mut BTreeMap<Vec<String>, f64>) {
    let mut c = c;
    loop {
        if c.is_terminated() {
            return;
        }
        let succ = c.step();
        if succ.len() == 1 && succ[0].0.is_empty() {
            c = succ.into_iter().next().expect("one").1;
            continue;
        }
        if budget == 0 {
            return;
        }
        for (l, s) in succ {
            let mut p = path.clone();
            p.push(l);
            let w = s.weight();
            *out.entry(p.clone()).or_insert(0.0) += w;
            if w >= PRUNE_WEIGHT {
                profile(s, p, budget - 1, out);
            }
        }
        return;
    }
}

/// Sum of terminated branch states after at most `depth` transitions.
pub fn run_to_depth(p: &Program, rho: &Matrix, depth: usize) -> Result<Matrix> {
    let t = BranchTree::expand(Configuration::initial(p, rho)?, depth);
    let s = t.terminated_sum();
    if s.rows() == 0 {
        return Ok(Matrix::zeros(p.output_dim(), p.output_dim()));
    }
    Ok(s)
}
