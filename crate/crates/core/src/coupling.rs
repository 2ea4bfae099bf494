//! Quantum couplings and liftings.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    eigh, is_unitary, min_eigenvalue, partial_trace, partial_transpose, support_basis, Matrix, Shape, C64,
};
use crate::sdp::{self, hermitian_basis, Constraint, Sdp, SdpOptions, SdpStatus};

/// Tolerance on |tr ρ₁ − tr ρ₂| for a coupling to exist.
pub const TRACE_MATCH_TOL: f64 = 1e-8;
/// A lifting exists when the best coupling puts this much weight outside X
/// at most.
pub const LIFTING_TOL: f64 = 1e-6;
const SUPPORT_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct CouplingProblem {
    pub rho1: Matrix,
    pub rho2: Matrix,
    pub objective: Matrix,
    pub support: Option<Matrix>,
    pub ppt: bool,
}

impl CouplingProblem {
    pub fn new(rho1: Matrix, rho2: Matrix, objective: Matrix) -> CouplingProblem {
        CouplingProblem { rho1, rho2, objective, support: None, ppt: false }
    }

    pub fn with_support(mut self, x: Matrix) -> Self {
        self.support = Some(x);
        self
    }

    pub fn with_ppt(mut self) -> Self {
        self.ppt = true;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingStatus {
    Optimal,
    Feasible,
    Infeasible,
    NumericalFailure,
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingSolution {
    pub status: CouplingStatus,
    pub witness: Matrix,
    /// tr(objective · witness); −∞ when no coupling exists.
    pub value: f64,
    pub marginal_residual: f64,
    pub psd_violation: f64,
    pub iterations: usize,
}

impl CouplingSolution {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, CouplingStatus::Optimal | CouplingStatus::Feasible)
    }

    fn infeasible(n: usize) -> CouplingSolution {
        CouplingSolution {
            status: CouplingStatus::Infeasible,
            witness: Matrix::zeros(n, n),
            value: f64::NEG_INFINITY,
            marginal_residual: f64::INFINITY,
            psd_violation: 0.0,
            iterations: 0,
        }
    }
}

fn check_state(rho: &Matrix, what: &str) -> Result<()> {
    if !rho.is_square() || rho.rows() == 0 {
        return Err(Error::dim(format!("{what} must be a nonempty square matrix")));
    }
    if !rho.is_hermitian(1e-8) {
        return Err(Error::Invalid(format!("{what} is not Hermitian")));
    }
    Ok(())
}

/// Maximizes tr(objective·σ) over couplings σ of ⟨ρ₁, ρ₂⟩, optionally
/// restricted to supp σ ⊆ X and to PPT states.
pub fn max_coupling_value(p: &CouplingProblem) -> Result<CouplingSolution> {
    check_state(&p.rho1, "rho1")?;
    check_state(&p.rho2, "rho2")?;
    let (d1, d2) = (p.rho1.rows(), p.rho2.rows());
    let n = d1 * d2;
    if p.objective.dims() != (n, n) {
        return Err(Error::dim(format!("objective {:?} for a {d1}x{d2} coupling", p.objective.dims())));
    }
    if let Some(x) = &p.support {
        if x.dims() != (n, n) {
            return Err(Error::dim("support projector has the wrong size"));
        }
    }
    let (t1, t2) = (p.rho1.trace().re, p.rho2.trace().re);
    if (t1 - t2).abs() > TRACE_MATCH_TOL {
        return Ok(CouplingSolution::infeasible(n));
    }
    if t1.abs() <= 1e-14 {
        return Ok(CouplingSolution {
            status: CouplingStatus::Optimal,
            witness: Matrix::zeros(n, n),
            value: 0.0,
            marginal_residual: 0.0,
            psd_violation: 0.0,
            iterations: 0,
        });
    }

    // Every coupling lives on supp ρ₁ ⊗ supp ρ₂.
    let v1 = support_basis(&p.rho1, SUPPORT_TOL)?;
    let v2 = support_basis(&p.rho2, SUPPORT_TOL)?;
    let (r1, r2) = (v1.cols(), v2.cols());
    let w = v1.kron(&v2);
    let rr1 = v1.sandwich_dual(&p.rho1);
    let rr2 = v2.sandwich_dual(&p.rho2);

    let v = match &p.support {
        None => w.clone(),
        Some(x) => {
            let q = w.sandwich_dual(x);
            let e = eigh(&q)?;
            let keep: Vec<usize> = (0..e.values.len()).filter(|&k| e.values[k] > 1.0 - 1e-9).collect();
            if keep.is_empty() {
                return Ok(CouplingSolution::infeasible(n));
            }
            let mut u = Matrix::zeros(r1 * r2, keep.len());
            for (c, &k) in keep.iter().enumerate() {
                u.set_column(c, &e.vector(k));
            }
            w.matmul(&u)
        }
    };
    let s = v.cols();
    // Coordinates of the reduced variable inside supp ρ₁ ⊗ supp ρ₂.
    let u = w.dagger().matmul(&v);

    let mut blocks = vec![s];
    if p.ppt {
        blocks.push(n);
    }
    let nb = blocks.len();
    let mut constraints = Vec::new();
    let push = |cons: &mut Vec<Constraint>, a: Matrix, rhs: f64, extra: Option<Matrix>| {
        let mut mats = vec![Some(a)];
        if nb > 1 {
            mats.push(extra);
        }
        cons.push(Constraint { mats, rhs });
    };
    for e in hermitian_basis(r1) {
        let a = u.sandwich_dual(&e.kron(&Matrix::identity(r2))).hermitian_part();
        push(&mut constraints, a, e.expect(&rr1), None);
    }
    for f in hermitian_basis(r2) {
        let a = u.sandwich_dual(&Matrix::identity(r1).kron(&f)).hermitian_part();
        push(&mut constraints, a, f.expect(&rr2), None);
    }
    if p.ppt {
        let sh = Shape::new(vec![d1, d2])?;
        for g in hermitian_basis(n) {
            let gt = partial_transpose(&g, &sh, &[1])?;
            let a = v.sandwich_dual(&gt).hermitian_part();
            push(&mut constraints, a, 0.0, Some(g.scale_re(-1.0)));
        }
    }
    let mut objective = vec![Some(v.sandwich_dual(&p.objective).hermitian_part())];
    if nb > 1 {
        objective.push(None);
    }
    let problem = Sdp { blocks, objective, constraints };
    let sol = match sdp::solve(&problem, &SdpOptions::default()) {
        Ok(s) => s,
        Err(Error::Infeasible(_)) => return Ok(CouplingSolution::infeasible(n)),
        Err(e) => return Err(e),
    };
    let witness = v.sandwich(&sol.x[0]).hermitian_part();
    let sh = Shape::new(vec![d1, d2])?;
    let m1 = partial_trace(&witness, &sh, &[0])?;
    let m2 = partial_trace(&witness, &sh, &[1])?;
    let marginal_residual = m1.max_abs_diff(&p.rho1).max(m2.max_abs_diff(&p.rho2));
    let psd_violation = (-min_eigenvalue(&witness)?).max(0.0);
    let status = match sol.status {
        SdpStatus::Optimal => CouplingStatus::Optimal,
        SdpStatus::Feasible => CouplingStatus::Feasible,
        SdpStatus::Infeasible => CouplingStatus::Infeasible,
        SdpStatus::NumericalFailure if marginal_residual <= 1e-6 && psd_violation <= 1e-7 => CouplingStatus::Feasible,
        SdpStatus::NumericalFailure => CouplingStatus::NumericalFailure,
    };
    Ok(CouplingSolution {
        status,
        value: p.objective.expect(&witness),
        witness,
        marginal_residual,
        psd_violation,
        iterations: sol.iterations,
    })
}

/// Decides ρ₁ X# ρ₂: is there a coupling supported inside the projector X?
/// The returned solution maximizes tr(Xσ); it is feasible iff that value
/// reaches tr ρ₁.
pub fn lifting_exists(rho1: &Matrix, rho2: &Matrix, x: &Matrix) -> Result<CouplingSolution> {
    let mut sol = max_coupling_value(&CouplingProblem::new(rho1.clone(), rho2.clone(), x.clone()))?;
    if sol.status == CouplingStatus::NumericalFailure || sol.status == CouplingStatus::Infeasible {
        return Ok(sol);
    }
    if sol.value < rho1.trace().re - LIFTING_TOL {
        sol.status = CouplingStatus::Infeasible;
    }
    Ok(sol)
}

/// Closed-form couplings.
#[derive(Clone, Debug)]
pub enum CouplingKind {
    /// ρ₁ ⊗ ρ₂ / tr ρ₁ (the plain product when the traces are one).
    Tensor { rho1: Matrix, rho2: Matrix },
    /// Σᵢ pᵢ |ψᵢψᵢ⟩⟨ψᵢψᵢ| for the spectral decomposition ρ = Σᵢ pᵢ|ψᵢ⟩⟨ψᵢ|.
    BasisIdentity { rho: Matrix },
    /// (1/d) Σᵢ (|i⟩U|i⟩)(⟨i|⟨i|U†).
    UnitaryUnif { u: Matrix },
}

pub fn make_coupling(kind: &CouplingKind) -> Result<Matrix> {
    match kind {
        CouplingKind::Tensor { rho1, rho2 } => {
            let (t1, t2) = (rho1.trace().re, rho2.trace().re);
            if (t1 - t2).abs() > TRACE_MATCH_TOL {
                return Err(Error::Infeasible(format!("traces {t1} and {t2} differ")));
            }
            if t1.abs() < 1e-14 {
                return Ok(Matrix::zeros(rho1.rows() * rho2.rows(), rho1.rows() * rho2.rows()));
            }
            Ok(rho1.kron(rho2).scale_re(1.0 / t1))
        }
        CouplingKind::BasisIdentity { rho } => {
            let e = eigh(rho)?;
            let d = rho.rows();
            let mut out = Matrix::zeros(d * d, d * d);
            for k in 0..d {
                let v = e.vector(k);
                let vv: Vec<C64> = v.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
                out = &out + &Matrix::projector(&vv).scale_re(e.values[k]);
            }
            Ok(out)
        }
        CouplingKind::UnitaryUnif { u } => {
            if !is_unitary(u, 1e-9) {
                return Err(Error::Invalid("unitary_unif needs a unitary".into()));
            }
            let d = u.rows();
            let mut out = Matrix::zeros(d * d, d * d);
            for i in 0..d {
                let ui = u.column(i);
                let mut v = vec![C64::new(0.0, 0.0); d * d];
                for (j, z) in ui.iter().enumerate() {
                    v[i * d + j] = *z;
                }
                out = &out + &Matrix::projector(&v);
            }
            Ok(out.scale_re(1.0 / d as f64))
        }
    }
}

/// Smallest eigenvalue of the partial transpose over `factors`.
pub fn ppt_min_eigenvalue(rho: &Matrix, shape: &Shape, factors: &[usize]) -> Result<f64> {
    min_eigenvalue(&partial_transpose(rho, shape, factors)?)
}

/// Peres-Horodecki test, exact on two qubits.
pub fn is_separable_2x2(rho: &Matrix) -> Result<bool> {
    if rho.dims() != (4, 4) {
        return Err(Error::dim("is_separable_2x2 needs a 4x4 state"));
    }
    Ok(ppt_min_eigenvalue(rho, &Shape::new(vec![2, 2])?, &[1])? >= -1e-9)
}

/// |00…⟩-style product check: ρ = tr₂ρ ⊗ tr₁ρ / tr ρ.
pub fn is_product(rho: &Matrix, d1: usize, d2: usize, tol: f64) -> Result<bool> {
    let sh = Shape::new(vec![d1, d2])?;
    let t = rho.trace().re;
    if t.abs() < 1e-14 {
        return Ok(true);
    }
    let a = partial_trace(rho, &sh, &[0])?;
    let b = partial_trace(rho, &sh, &[1])?;
    Ok(a.kron(&b).scale_re(1.0 / t).approx_eq(rho, tol))
}

/// |a⟩⟨a| ⊗ |b⟩⟨b|.
pub fn pure_product(a: &[C64], b: &[C64]) -> Matrix {
    let v: Vec<C64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
    Matrix::projector(&v)
}
