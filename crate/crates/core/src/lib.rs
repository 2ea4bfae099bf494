//! Executable relational program logic for quantum while-programs.

pub mod casebook;
pub mod comparability;
pub mod coupling;
pub mod error;
pub mod judgment;
pub mod lang;
pub mod rules;
pub mod linalg;
pub mod sdp;
pub mod semantics;

pub use error::{Error, Result};
