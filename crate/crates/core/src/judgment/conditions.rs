use serde::Serialize;

use crate::coupling::ppt_min_eigenvalue;
use crate::error::{Error, Result};
use crate::lang::{Measurement, Program};
use crate::linalg::{embed, partial_trace, Matrix, Shape};
use crate::semantics::{denote, dual};

/// Agreement tolerance for outcome probabilities.
pub const PROB_TOL: f64 = 1e-8;

/// A measurement lifted to the whole input space of a program.
#[derive(Clone, Debug)]
pub struct MeasSpec {
    pub name: String,
    pub labels: Vec<String>,
    pub ops: Vec<Matrix>,
}

impl MeasSpec {
    /// Embeds `meas`, acting on `regs`, into the space spanned by `space`
    /// (register names in tensor order) with dimensions `shape`.
    pub fn embedded(space: &[String], shape: &Shape, meas: &Measurement, regs: &[String]) -> Result<MeasSpec> {
        let targets = regs
            .iter()
            .map(|q| {
                space
                    .iter()
                    .position(|s| s == q)
                    .ok_or_else(|| Error::Invalid(format!("register {q} is not in the state space")))
            })
            .collect::<Result<Vec<_>>>()?;
        let ops = meas.operators().iter().map(|m| embed(m, shape, &targets)).collect::<Result<Vec<_>>>()?;
        Ok(MeasSpec { name: meas.name.clone(), labels: meas.labels().iter().map(|s| s.to_string()).collect(), ops })
    }

    /// `meas` on `regs`, within the input space of `p`.
    pub fn on_inputs(p: &Program, meas: &Measurement, regs: &[String]) -> Result<MeasSpec> {
        MeasSpec::embedded(p.inputs(), &p.input_shape(), meas, regs)
    }

    pub fn dim(&self) -> usize {
        self.ops.first().map(Matrix::rows).unwrap_or(0)
    }

    pub fn effects(&self) -> Vec<Matrix> {
        self.ops.iter().map(|m| m.dagger().matmul(m)).collect()
    }

    pub fn probabilities(&self, rho: &Matrix) -> Vec<f64> {
        self.effects().iter().map(|e| e.expect(rho)).collect()
    }

    pub fn post_states(&self, rho: &Matrix) -> Vec<Matrix> {
        self.ops.iter().map(|m| m.sandwich(rho)).collect()
    }
}

/// Guard measurement and body semantics of one loop.
#[derive(Clone, Debug)]
pub struct LoopSpec {
    pub guard: MeasSpec,
    /// Vectorized dual of the body semantics.
    pub body_dual: Matrix,
}

impl LoopSpec {
    pub fn new(guard: MeasSpec, body: &Program) -> Result<LoopSpec> {
        if guard.ops.len() != 2 {
            return Err(Error::Invalid("loop guards must be binary measurements".into()));
        }
        let e = denote(body)?;
        if e.d_in() != guard.dim() || e.d_out() != guard.dim() {
            return Err(Error::dim("loop body does not act on the guard's space"));
        }
        Ok(LoopSpec { guard, body_dual: dual(&e).matrix })
    }

    /// Effects F_n with tr(F_n ρ) = tr[E₀∘(⟦P⟧∘E₁)ⁿ(ρ)], for n < count.
    pub fn exit_effects(&self, count: usize) -> Vec<Matrix> {
        let d = self.guard.dim();
        let (m0, m1) = (&self.guard.ops[0], &self.guard.ops[1]);
        let mut f = m0.dagger().matmul(m0);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(f.clone());
            let pf = crate::linalg::apply_superop(&self.body_dual, &f, d).expect("shapes agree");
            f = m1.sandwich_dual(&pf);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub enum SideCondition {
    /// M₁ ≈ M₂.
    MeasEq { left: MeasSpec, right: MeasSpec },
    /// (M₁, P₁) ≈ (M₂, P₂).
    MeasLoopEq { left: LoopSpec, right: LoopSpec },
    /// Separability between the listed groups of factors of the joint space.
    Separability { shape: Shape, names: Vec<String>, parts: Vec<Vec<usize>> },
}

impl SideCondition {
    pub fn meas_eq(
        p1: &Program,
        m1: &Measurement,
        regs1: &[String],
        p2: &Program,
        m2: &Measurement,
        regs2: &[String],
    ) -> Result<SideCondition> {
        if m1.labels() != m2.labels() {
            return Err(Error::Invalid(format!(
                "outcome sets {:?} and {:?} differ",
                m1.labels(),
                m2.labels()
            )));
        }
        Ok(SideCondition::MeasEq { left: MeasSpec::on_inputs(p1, m1, regs1)?, right: MeasSpec::on_inputs(p2, m2, regs2)? })
    }

    /// `body1`, `body2` are the loop bodies; their input spaces are the
    /// spaces of the condition.
    pub fn meas_loop_eq(
        body1: &Program,
        m1: &Measurement,
        regs1: &[String],
        body2: &Program,
        m2: &Measurement,
        regs2: &[String],
    ) -> Result<SideCondition> {
        let left = LoopSpec::new(MeasSpec::on_inputs(body1, m1, regs1)?, body1)?;
        let right = LoopSpec::new(MeasSpec::on_inputs(body2, m2, regs2)?, body2)?;
        Ok(SideCondition::MeasLoopEq { left, right })
    }

    /// Partition of the tagged registers `q<1>` (of p1) and `q<2>` (of p2).
    pub fn separability(p1: &Program, p2: &Program, parts: &[Vec<String>]) -> Result<SideCondition> {
        let mut names: Vec<String> = p1.inputs().iter().map(|q| format!("{q}<1>")).collect();
        names.extend(p2.inputs().iter().map(|q| format!("{q}<2>")));
        let mut dims = p1.input_shape().dims().to_vec();
        dims.extend_from_slice(p2.input_shape().dims());
        let mut seen = vec![false; names.len()];
        let mut idx = Vec::new();
        for part in parts {
            let mut v = Vec::new();
            for q in part {
                let k = names
                    .iter()
                    .position(|n| n == q)
                    .ok_or_else(|| Error::Invalid(format!("{q} is not a tagged input register")))?;
                if seen[k] {
                    return Err(Error::Invalid(format!("{q} appears in two parts")));
                }
                seen[k] = true;
                v.push(k);
            }
            idx.push(v);
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::Invalid(format!("partition misses {}", names[k])));
        }
        Ok(SideCondition::Separability { shape: Shape::new(dims)?, names, parts: idx })
    }

    /// [var(P₁⟨1⟩), var(P₂⟨2⟩)].
    pub fn separable_sides(p1: &Program, p2: &Program) -> Result<SideCondition> {
        let left: Vec<String> = p1.inputs().iter().map(|q| format!("{q}<1>")).collect();
        let right: Vec<String> = p2.inputs().iter().map(|q| format!("{q}<2>")).collect();
        let parts: Vec<Vec<String>> = [left, right].into_iter().filter(|v| !v.is_empty()).collect();
        SideCondition::separability(p1, p2, &parts)
    }

    pub fn is_measurement(&self) -> bool {
        !matches!(self, SideCondition::Separability { .. })
    }

    pub fn describe(&self) -> String {
        match self {
            SideCondition::MeasEq { left, right } => format!("{} ≈ {}", left.name, right.name),
            SideCondition::MeasLoopEq { left, right } => format!("({},P1) ≈ ({},P2)", left.guard.name, right.guard.name),
            SideCondition::Separability { names, parts, .. } => {
                let ps: Vec<String> = parts
                    .iter()
                    .map(|p| p.iter().map(|&k| names[k].clone()).collect::<Vec<_>>().join(","))
                    .collect();
                format!("[{}]", ps.join("; "))
            }
        }
    }

    /// Hermitian H with tr(Hρ) = 0 for all satisfying ρ, when the condition is
    /// an affine one.
    pub(crate) fn linear_constraints(&self) -> Vec<Matrix> {
        match self {
            SideCondition::MeasEq { left, right } => {
                let (d1, d2) = (left.dim(), right.dim());
                left.effects()
                    .iter()
                    .zip(right.effects())
                    .map(|(a, b)| &a.kron(&Matrix::identity(d2)) - &Matrix::identity(d1).kron(&b))
                    .collect()
            }
            SideCondition::MeasLoopEq { left, right } => {
                let (d1, d2) = (left.guard.dim(), right.guard.dim());
                let n = loop_bound(d1, d2);
                left.exit_effects(n)
                    .iter()
                    .zip(right.exit_effects(n))
                    .map(|(a, b)| &a.kron(&Matrix::identity(d2)) - &Matrix::identity(d1).kron(&b))
                    .collect()
            }
            SideCondition::Separability { .. } => vec![],
        }
    }

    pub fn joint_dims(&self) -> (usize, usize) {
        match self {
            SideCondition::MeasEq { left, right } => (left.dim(), right.dim()),
            SideCondition::MeasLoopEq { left, right } => (left.guard.dim(), right.guard.dim()),
            SideCondition::Separability { shape, .. } => (shape.total(), 1),
        }
    }
}

/// Number of iterations to compare: n = 0, …, d₁²+d₂²−1.
pub fn loop_bound(d1: usize, d2: usize) -> usize {
    d1 * d1 + d2 * d2
}

pub fn marginals(rho: &Matrix, d1: usize, d2: usize) -> Result<(Matrix, Matrix)> {
    if rho.dims() != (d1 * d2, d1 * d2) {
        return Err(Error::dim(format!("joint state {:?} for {d1}x{d2}", rho.dims())));
    }
    let sh = Shape::new(vec![d1, d2])?;
    Ok((partial_trace(rho, &sh, &[0])?, partial_trace(rho, &sh, &[1])?))
}

/// Largest outcome-probability discrepancy of M₁ ≈ M₂ on ρ.
pub fn meas_eq_defect(left: &MeasSpec, right: &MeasSpec, rho: &Matrix) -> Result<f64> {
    let (r1, r2) = marginals(rho, left.dim(), right.dim())?;
    Ok(left
        .probabilities(&r1)
        .iter()
        .zip(right.probabilities(&r2))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

pub fn check_meas_eq(cond: &SideCondition, rho: &Matrix) -> Result<bool> {
    match cond {
        SideCondition::MeasEq { left, right } => Ok(meas_eq_defect(left, right, rho)? <= PROB_TOL),
        _ => Err(Error::Invalid("not a measurement condition".into())),
    }
}

/// Exit probabilities of both loops at iterations 0..count.
pub fn loop_exit_profile(left: &LoopSpec, right: &LoopSpec, rho: &Matrix, count: usize) -> Result<Vec<(f64, f64)>> {
    let (r1, r2) = marginals(rho, left.guard.dim(), right.guard.dim())?;
    Ok(left
        .exit_effects(count)
        .iter()
        .zip(right.exit_effects(count))
        .map(|(a, b)| (a.expect(&r1), b.expect(&r2)))
        .collect())
}

pub fn check_meas_loop_eq(cond: &SideCondition, rho: &Matrix) -> Result<bool> {
    match cond {
        SideCondition::MeasLoopEq { left, right } => {
            let n = loop_bound(left.guard.dim(), right.guard.dim());
            Ok(loop_exit_profile(left, right, rho, n)?.iter().all(|(a, b)| (a - b).abs() <= PROB_TOL))
        }
        _ => Err(Error::Invalid("not a loop measurement condition".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparabilityStatus {
    Yes,
    No,
    RelaxationPassed,
}

/// PPT test across every bipartition of the parts. Exact when there are
/// two parts of total dimension at most 6, or when ρ factorizes.
pub fn check_separability(cond: &SideCondition, rho: &Matrix) -> Result<SeparabilityStatus> {
    let (shape, parts) = match cond {
        SideCondition::Separability { shape, parts, .. } => (shape, parts),
        _ => return Err(Error::Invalid("not a separability condition".into())),
    };
    if rho.dims() != (shape.total(), shape.total()) {
        return Err(Error::dim("state does not match the partition's space"));
    }
    let k = parts.len();
    if k <= 1 {
        return Ok(SeparabilityStatus::Yes);
    }
    for mask in 1..(1u32 << (k - 1)) {
        let factors: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).flat_map(|i| parts[i].clone()).collect();
        if ppt_min_eigenvalue(rho, shape, &factors)? < -1e-9 {
            return Ok(SeparabilityStatus::No);
        }
    }
    let part_dim = |p: &Vec<usize>| p.iter().map(|&f| shape.dims()[f]).product::<usize>();
    if k == 2 && part_dim(&parts[0]) * part_dim(&parts[1]) <= 6 {
        return Ok(SeparabilityStatus::Yes);
    }
    if is_product_across(rho, shape, parts)? {
        return Ok(SeparabilityStatus::Yes);
    }
    Ok(SeparabilityStatus::RelaxationPassed)
}

fn is_product_across(rho: &Matrix, shape: &Shape, parts: &[Vec<usize>]) -> Result<bool> {
    let t = rho.trace().re;
    if t.abs() < 1e-14 {
        return Ok(true);
    }
    let mut order = Vec::new();
    let mut prod: Option<Matrix> = None;
    for p in parts {
        let mut keep = p.clone();
        keep.sort_unstable();
        let r = partial_trace(rho, shape, &keep)?.scale_re(1.0 / t);
        prod = Some(match prod {
            None => r,
            Some(a) => a.kron(&r),
        });
        order.extend(keep);
    }
    let prod = prod.expect("at least one part").scale_re(t);
    // Bring ρ into part order before comparing.
    let permuted = crate::linalg::permute(rho, shape, &order)?;
    Ok(permuted.approx_eq(&prod, 1e-9))
}

pub fn satisfies(cond: &SideCondition, rho: &Matrix) -> Result<bool> {
    match cond {
        SideCondition::MeasEq { .. } => check_meas_eq(cond, rho),
        SideCondition::MeasLoopEq { .. } => check_meas_loop_eq(cond, rho),
        SideCondition::Separability { .. } => Ok(check_separability(cond, rho)? != SeparabilityStatus::No),
    }
}
