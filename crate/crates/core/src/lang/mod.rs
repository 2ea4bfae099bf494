//! The quantum while-language: AST, concrete syntax, parser and printer.
//!
//! ```text
//! var p : 3;
//! let U = sqrt(0.5) * [[1, 1], [1, -1]];
//! q := |0>; q := U[q];
//! if M[q] = 0 -> skip [] 1 -> q := X[q] fi;
//! while M[q] = 1 do q := H[q] od;
//! a := ZERO[]; trout a
//! ```

pub mod ast;
pub mod builtins;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use ast::{Channel, Gate, Measurement, Program, Register, Stmt};
pub use parser::{parse, Scope};
pub use pretty::{matrix_literal, pretty, pretty_body};

/// Renames every register with a `<tag>` suffix.
pub fn tag_copy(p: &Program, tag: u8) -> Program {
    p.tag_copy(tag)
}
