//! Operational and denotational semantics.

pub mod compile;
pub mod denote;
pub mod step;
pub mod superop;

pub use compile::{compile, Node};
pub use denote::{denote, dual, is_lossless, LoopCertificate, LosslessReport, SemanticFn};
pub use step::{outcome_profile, run_to_depth, BranchTree, Configuration};

use crate::error::Result;
use crate::lang::Program;
use crate::linalg::Matrix;

/// ⟦p⟧(ρ).
pub fn run(p: &Program, rho: &Matrix) -> Result<Matrix> {
    compile(p)?.apply(rho)
}
