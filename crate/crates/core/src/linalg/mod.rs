//! Dense complex linear algebra on finite-dimensional Hilbert spaces.

pub mod eigen;
pub mod gates;
pub mod general;
pub mod json;
pub mod matrix;
pub mod ops;
pub mod random;
pub mod shape;
pub mod solve;

pub use eigen::{eigh, eigvalsh, Eigh};
pub use matrix::{c, kron_all, r, Matrix, C64, IM, ONE, ZERO};
pub use ops::*;
pub use shape::{embed, embed_map, partial_trace, partial_transpose, permute, Shape};

/// Kronecker product.
pub fn tensor(a: &Matrix, b: &Matrix) -> Matrix {
    a.kron(b)
}
