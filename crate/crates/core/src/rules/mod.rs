//! Relational proof rules, derivation checking and proof outlines.

mod derivation;
mod outline;
mod qpd;
mod rule;
mod transform;

pub use derivation::*;
pub use outline::{Context, CondSpec, ConjSpec, FrameJson, MeasRef, Node, Outline, OutlineReport, PredRef};
pub use qpd::{qpd_wp, QpdReport};
pub use rule::{Rule, Sides};
pub use transform::{
    ensure_predicate, frame_split, joint_dual, joint_forward, postcondition_of, precondition_of, proj, FrameSpec, Payload,
    RuleInstance,
};
