//! Every derivation built from a single rule application must conclude a
//! judgment that survives sampling.

mod common;

use common::soundness::{harness, INSTANCES, RULES};

#[test]
fn derived_judgments_survive_sampling() {
    assert_eq!(harness(), RULES.len() * INSTANCES as usize);
}
