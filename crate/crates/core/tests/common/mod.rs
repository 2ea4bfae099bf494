#![allow(dead_code)]

pub mod loops;
pub mod soundness;
