//! Condition systems, fiber products and the stabilization loop.

mod assemble;
mod conditions;
mod stabilize;

pub use assemble::{image_dimension, refine_onto, FiberProductSystem, ImageDimension};
pub use conditions::{
    build_hilbert_condition, build_infinity_condition, build_trace_condition, build_witness_condition,
    move_to_slice, random_unitary, ConditionKind, ConditionSystem, Constants,
};
pub use stabilize::{dimension_profile, stabilize, ConditionFactory, StabilizeOptions, Stabilized, Trial};
