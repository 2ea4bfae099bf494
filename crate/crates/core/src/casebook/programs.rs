//! Program sources for the casebook scenarios.

use crate::lang::matrix_literal;
use crate::linalg::gates::{coin_y, pauli_x, pauli_y, pauli_z};
use crate::linalg::{c, Matrix, C64};

pub const P1: &str = "var q : 2; q := |0>; q := H[q]; if M[q] = 0 -> q := X[q] [] 1 -> q := H[q] fi";
pub const P2: &str = "var q : 2; q := |0>; if M'[q] = 0 -> q := Z[q] [] 1 -> q := H[q] fi; q := H[q]";
pub const Q1: &str = "var q : 2; if M[q] = 0 -> q := X[q] [] 1 -> q := H[q] fi";
pub const Q2: &str = "var q : 2; if M'[q] = 0 -> q := Z[q] [] 1 -> q := H[q] fi";

pub const LOOPS_LEFT: &str = "var q : 2; while M[q] = 1 do q := H[q] od; \
     if M[q] = 0 -> q := X[q] [] 1 -> skip fi; while M[q] = 1 do q := Y[q] od";
pub const LOOPS_RIGHT: &str = "var q : 2; while M'[q] = 1 do q := H[q] od; \
     if M'[q] = 0 -> q := Z[q] [] 1 -> skip fi; while M'[q] = 1 do q := Y[q] od";

pub const PROJ_LEFT: &str = "var q : 2; q := X[q]";
pub const PROJ_RIGHT: &str = "var q : 2; q := H[q]; q := H[q]";

/// Discrete Fourier transform on C^d.
pub fn fourier(d: usize) -> Matrix {
    let s = 1.0 / (d as f64).sqrt();
    let rows: Vec<Vec<C64>> = (0..d)
        .map(|j| {
            (0..d)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * ((j * k) % d) as f64 / d as f64;
                    c(s * t.cos(), s * t.sin())
                })
                .collect()
        })
        .collect();
    Matrix::from_rows(&rows)
}

/// Prepares F|0⟩, which is uniform in the computational basis.
pub fn uniform_source(d: usize) -> String {
    format!("var q : {d};\nlet F = {};\nq := |0>; q := F[q]", matrix_literal(&fourier(d)))
}

pub fn skip_source(reg: &str, d: usize) -> String {
    format!("var {reg} : {d}; skip")
}

/// The Bernoulli factory loop with coin `u`, optionally without the final
/// trace-out.
pub fn qbf_source(u: &Matrix, trace_out: bool) -> String {
    let mut s = format!(
        "var qx : 2, qy : 2;\nlet U = {};\n\
         let N = meas {{ 0: [[0,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,0]], 1: [[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,1]] }};\n\
         qx := |0>; qy := |0>;\nwhile N[qx, qy] = 1 do qx := U[qx]; qy := U[qy] od",
        matrix_literal(u)
    );
    if trace_out {
        s.push_str(";\ntrout qy");
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Noise {
    BitFlip,
    PhaseFlip,
    BitPhaseFlip,
}

impl Noise {
    pub fn pauli(self) -> Matrix {
        match self {
            Noise::BitFlip => pauli_x(),
            Noise::PhaseFlip => pauli_z(),
            Noise::BitPhaseFlip => pauli_y(),
        }
    }

    pub fn kraus(self, p: f64) -> Vec<Matrix> {
        vec![Matrix::identity(2).scale_re(p.sqrt()), self.pauli().scale_re((1.0 - p).sqrt())]
    }

    /// Phase-flip parameter of the precondition in the reliability judgment.
    pub fn effective(self, p: f64) -> f64 {
        match self {
            Noise::BitFlip | Noise::PhaseFlip => p,
            Noise::BitPhaseFlip => p * p + (1.0 - p) * (1.0 - p),
        }
    }
}

/// Teleportation from p to r, with p and q traced out at the end. With
/// noise, the channel acts on q and on p right after their Hadamards.
pub fn qtel_source(noise: Option<(Noise, f64)>) -> String {
    let mut s = String::from("var p : 2, q : 2, r : 2;\n");
    if let Some((n, p)) = noise {
        let [k0, k1] = [0, 1].map(|i| matrix_literal(&n.kraus(p)[i]));
        s.push_str(&format!("let E = kraus {{ {k0}, {k1} }};\n"));
    }
    let e = |reg: &str| if noise.is_some() { format!(" {reg} := E[{reg}];") } else { String::new() };
    s.push_str(&format!(
        "q := |0>; r := |0>; q := H[q];{} q, r := CNOT[q, r]; p, q := CNOT[p, q]; p := H[p];{}\n\
         if M[q] = 0 -> skip [] 1 -> r := X[r] fi;\n\
         if M[p] = 0 -> skip [] 1 -> r := Z[r] fi;\n\
         trout p; trout q",
        e("q"),
        e("p")
    ));
    s
}

fn key_gen(n: usize) -> String {
    let mut s = String::new();
    for k in 1..=n {
        s.push_str(&format!("a{k} := ZERO[]; b{k} := ZERO[]; a{k} := H[a{k}]; b{k} := H[b{k}];\n"));
    }
    for k in 1..=n {
        s.push_str(&format!("if M[a{k}, b{k}] = 00 -> skip [] 01 -> skip [] 10 -> skip [] 11 -> skip fi;\n"));
    }
    s
}

fn pad(n: usize) -> String {
    (1..=n)
        .map(|k| {
            format!(
                "if M[a{k}, b{k}] = 00 -> skip [] 01 -> p{k} := Z[p{k}] [] 10 -> p{k} := X[p{k}] \
                 [] 11 -> p{k} := Z[p{k}]; p{k} := X[p{k}] fi;\n"
            )
        })
        .collect()
}

fn dis_key(n: usize) -> String {
    let t: Vec<String> = (1..=n).flat_map(|k| [format!("trout a{k}"), format!("trout b{k}")]).collect();
    t.join("; ")
}

fn data_regs(n: usize) -> String {
    (1..=n).map(|k| format!("p{k} : 2")).collect::<Vec<_>>().join(", ")
}

/// KeyGen; Enc; Dec; DisKey on n data qubits p1..pn.
pub fn qotp_correct_source(n: usize) -> String {
    format!("var {};\n{}{}{}{}", data_regs(n), key_gen(n), pad(n), pad(n), dis_key(n))
}

/// KeyGen; Enc; DisKey.
pub fn qotp_secure_source(n: usize) -> String {
    format!("var {};\n{}{}{}", data_regs(n), key_gen(n), pad(n), dis_key(n))
}

pub fn qotp_skip_source(n: usize) -> String {
    format!("var {}; skip", data_regs(n))
}

/// Shift on coin ⊗ position, positions 0..=n.
pub fn shift(n: usize) -> Matrix {
    let dp = n + 1;
    let mut s = Matrix::zeros(2 * dp, 2 * dp);
    for i in 1..n {
        s[(i - 1, i)] = c(1.0, 0.0);
        s[(dp + i + 1, dp + i)] = c(1.0, 0.0);
    }
    // The walk never shifts from an absorbing position, so any completion
    // to a unitary there gives the same program.
    complete_partial_isometry(&s)
}

/// Extends a partial isometry to a unitary by mapping the unused inputs
/// onto the unused outputs in order.
fn complete_partial_isometry(s: &Matrix) -> Matrix {
    let n = s.rows();
    let used_in: Vec<bool> = (0..n).map(|j| (0..n).any(|i| s[(i, j)].norm() > 0.5)).collect();
    let used_out: Vec<bool> = (0..n).map(|i| (0..n).any(|j| s[(i, j)].norm() > 0.5)).collect();
    let free_in = (0..n).filter(|&j| !used_in[j]);
    let free_out: Vec<usize> = (0..n).filter(|&i| !used_out[i]).collect();
    let mut out = s.clone();
    for (j, &i) in free_in.zip(&free_out) {
        out[(i, j)] = c(1.0, 0.0);
    }
    out
}

/// QW(C): the absorbing walk with coin C, a position measurement and the
/// coin traced out.
pub fn walk_source(n: usize, coin: Coin) -> String {
    let dp = n + 1;
    let yes: Vec<f64> = (0..dp).map(|i| if i == 0 || i == n { 1.0 } else { 0.0 }).collect();
    let no: Vec<f64> = yes.iter().map(|x| 1.0 - x).collect();
    let (coin_let, coin_name) = match coin {
        Coin::Hadamard => (String::new(), "H"),
        Coin::Balanced => (format!("let C = {};\n", matrix_literal(&coin_y())), "C"),
    };
    let arms: Vec<String> = (0..dp).map(|i| format!("{i} -> skip")).collect();
    format!(
        "var c : 2, p : {dp};\n{coin_let}let S = {};\nlet B = meas {{ 0: {}, 1: {} }};\n\
         while B[p] = 1 do c := {coin_name}[c]; c, p := S[c, p] od;\n\
         if M[p] = {} fi;\ntrout c",
        matrix_literal(&shift(n)),
        matrix_literal(&Matrix::diag_real(&yes)),
        matrix_literal(&Matrix::diag_real(&no)),
        arms.join(" [] ")
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coin {
    Hadamard,
    Balanced,
}

/// Diagonal phase relating the two walks: |d, i⟩ ↦ i^(i − d + 3) |d, i⟩.
pub fn walk_phase(n: usize) -> Matrix {
    walk_phase_with(n, |d, i| i as i64 - d as i64 + 3)
}

/// The variant |d, i⟩ ↦ i^(i + d + 3) |d, i⟩.
pub fn walk_phase_literal(n: usize) -> Matrix {
    walk_phase_with(n, |d, i| i as i64 + d as i64 + 3)
}

fn walk_phase_with(n: usize, e: impl Fn(usize, usize) -> i64) -> Matrix {
    let powers = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
    let v: Vec<C64> =
        (0..2).flat_map(|d| (0..=n).map(move |i| (d, i))).map(|(d, i)| powers[e(d, i).rem_euclid(4) as usize]).collect();
    Matrix::diag(&v)
}
