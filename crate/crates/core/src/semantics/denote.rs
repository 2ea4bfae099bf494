use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lang::Program;
use crate::linalg::general::{eigenvalues, null_space};
use crate::linalg::{apply_superop, choi_from_superop, kraus_from_choi, Matrix, Shape, C64};

use super::compile::{compile, Node};
use super::superop::node_matrix;

/// A superoperator between register spaces, in vectorized form.
#[derive(Clone, Debug)]
pub struct SemanticFn {
    pub input: Shape,
    pub output: Shape,
    pub input_regs: Vec<String>,
    pub output_regs: Vec<String>,
    pub matrix: Matrix,
    pub kraus: Option<Vec<Matrix>>,
}

impl SemanticFn {
    pub fn from_kraus(input: Shape, output: Shape, kraus: Vec<Matrix>) -> Result<SemanticFn> {
        let matrix = crate::linalg::superop_matrix(&kraus)?;
        if matrix.cols() != input.total().pow(2) || matrix.rows() != output.total().pow(2) {
            return Err(Error::dim("Kraus operators do not match the shapes"));
        }
        Ok(SemanticFn { input, output, input_regs: vec![], output_regs: vec![], matrix, kraus: Some(kraus) })
    }

    pub fn d_in(&self) -> usize {
        self.input.total()
    }

    pub fn d_out(&self) -> usize {
        self.output.total()
    }

    pub fn apply(&self, rho: &Matrix) -> Result<Matrix> {
        apply_superop(&self.matrix, rho, self.d_out())
    }

    /// Choi matrix Σᵢⱼ E(|i⟩⟨j|) ⊗ |i⟩⟨j|.
    pub fn choi(&self) -> Matrix {
        choi_from_superop(&self.matrix, self.d_in(), self.d_out())
    }

    /// Kraus operators, extracted from the Choi matrix if not stored.
    pub fn kraus_ops(&self) -> Result<Vec<Matrix>> {
        match &self.kraus {
            Some(k) => Ok(k.clone()),
            None => kraus_from_choi(&self.choi(), self.d_in(), self.d_out()),
        }
    }

    /// Largest violation of tr E(X) = tr X over the matrix units.
    pub fn trace_defect(&self) -> f64 {
        let (di, dout) = (self.d_in(), self.d_out());
        let mut worst: f64 = 0.0;
        for i in 0..di {
            for j in 0..di {
                let col = i * di + j;
                let t: C64 = (0..dout).map(|o| self.matrix[(o * dout + o, col)]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((t - want).norm());
            }
        }
        worst
    }

    pub fn compose(&self, next: &SemanticFn) -> Result<SemanticFn> {
        if next.d_in() != self.d_out() {
            return Err(Error::dim("composition of mismatched superoperators"));
        }
        Ok(SemanticFn {
            input: self.input.clone(),
            output: next.output.clone(),
            input_regs: self.input_regs.clone(),
            output_regs: next.output_regs.clone(),
            matrix: next.matrix.matmul(&self.matrix),
            kraus: None,
        })
    }
}

/// The semantic function of a program from its input to its output space.
pub fn denote(p: &Program) -> Result<SemanticFn> {
    let node = compile(p)?;
    let matrix = node_matrix(&node)?;
    let kraus = kraus_from_choi(&choi_from_superop(&matrix, p.input_dim(), p.output_dim()), p.input_dim(), p.output_dim())?;
    Ok(SemanticFn {
        input: p.input_shape(),
        output: p.output_shape(),
        input_regs: p.inputs().to_vec(),
        output_regs: p.outputs().to_vec(),
        matrix,
        kraus: Some(kraus),
    })
}

/// The dual map, with tr(A·E(ρ)) = tr(E*(A)·ρ).
pub fn dual(e: &SemanticFn) -> SemanticFn {
    let (di, dout) = (e.d_in(), e.d_out());
    // vec(E*(A)ᵀ) = Âᵀ vec(Aᵀ); conjugate by the transposition permutation.
    let mut m = Matrix::zeros(di * di, dout * dout);
    for o in 0..dout {
        for p in 0..dout {
            for i in 0..di {
                for j in 0..di {
                    m[(j * di + i, p * dout + o)] = e.matrix[(o * dout + p, i * di + j)];
                }
            }
        }
    }
    SemanticFn {
        input: e.output.clone(),
        output: e.input.clone(),
        input_regs: e.output_regs.clone(),
        output_regs: e.input_regs.clone(),
        matrix: m,
        kraus: e.kraus.as_ref().map(|ks| ks.iter().map(Matrix::dagger).collect()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopCertificate {
    /// Eigenvalues of the loop map X ↦ Σ (M₁†Eᵢ†) X (EᵢM₁) with modulus ≥ 1 − 1e−8.
    pub peripheral: Vec<(f64, f64)>,
    /// Largest |tr X| over normalized peripheral eigenvectors.
    pub max_trace: f64,
    pub lossless: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LosslessReport {
    pub lossless: bool,
    pub trace_defect: f64,
    pub loops: Vec<LoopCertificate>,
}

pub const LOSSLESS_TOL: f64 = 1e-8;

/// Trace preservation of ⟦p⟧, with the eigenvector certificate for every
/// loop in the program.
pub fn is_lossless(p: &Program) -> Result<LosslessReport> {
    let node = compile(p)?;
    let matrix = node_matrix(&node)?;
    let e = SemanticFn {
        input: p.input_shape(),
        output: p.output_shape(),
        input_regs: vec![],
        output_regs: vec![],
        matrix,
        kraus: None,
    };
    let defect = e.trace_defect();
    let mut loops = Vec::new();
    collect_loops(&node, &mut loops)?;
    Ok(LosslessReport { lossless: defect <= LOSSLESS_TOL, trace_defect: defect, loops })
}

fn collect_loops(n: &Arc<Node>, out: &mut Vec<LoopCertificate>) -> Result<()> {
    match n.as_ref() {
        Node::Seq(v) => v.iter().try_for_each(|x| collect_loops(x, out)),
        Node::Branch { branches, .. } => branches.iter().try_for_each(|x| collect_loops(x, out)),
        Node::Loop { m1, body, .. } => {
            collect_loops(body, out)?;
            out.push(loop_certificate(m1, body)?);
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Checks that every eigenvector of the dual iteration map with a
/// unit-modulus eigenvalue is traceless.
pub fn loop_certificate(m1: &Matrix, body: &Node) -> Result<LoopCertificate> {
    let a1 = crate::linalg::superop_matrix(std::slice::from_ref(m1))?;
    let t = node_matrix(body)?.matmul(&a1);
    let d = m1.rows();
    // Matrix of X ↦ Σ K† X K for the Kraus operators K = EᵢM₁ of t.
    let dual_t = dual(&SemanticFn {
        input: Shape::new(vec![d])?,
        output: Shape::new(vec![d])?,
        input_regs: vec![],
        output_regs: vec![],
        matrix: t,
        kraus: None,
    })
    .matrix;
    let n = dual_t.rows();
    let mut peripheral = Vec::new();
    let mut max_trace: f64 = 0.0;
    let mut lams: Vec<C64> = Vec::new();
    for lam in eigenvalues(&dual_t)? {
        if lam.norm() >= 1.0 - LOSSLESS_TOL && !lams.iter().any(|l| (l - lam).norm() < 1e-6) {
            lams.push(lam);
        }
    }
    for lam in lams {
        let shifted = &dual_t - &Matrix::identity(n).scale(lam);
        let ker = null_space(&shifted, 1e-7);
        peripheral.push((lam.re, lam.im));
        for v in ker {
            let tr: C64 = (0..d).map(|i| v[i * d + i]).sum();
            max_trace = max_trace.max(tr.norm());
        }
    }
    Ok(LoopCertificate { peripheral, max_trace, lossless: max_trace <= 1e-6 })
}
