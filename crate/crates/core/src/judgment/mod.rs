//! Semantic checking of relational judgments and their side conditions.

mod check;
mod conditions;
mod sample;

pub use check::*;
pub use conditions::*;
pub use sample::{project_to_slice, sample_input, Sampler};
