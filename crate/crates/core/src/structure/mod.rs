//! Detection of suspicious structure at perturbed parameters.

mod classify;
mod macaulay;
mod trace;

pub use classify::{
    classify_infinity, cluster_points, infinity_magnitudes, witness_superset, ClassifiedPoint, Label, Thresholds,
    WitnessOptions, WitnessSuperset,
};
pub(crate) use classify::{full_point, sliced};
pub use macaulay::{graded_monomials, local_hilbert, macaulay_matrix, taylor_coefficient, MacaulayProfile};
pub use trace::{best_subset, trace_data, SubsetTrace, TraceData};
