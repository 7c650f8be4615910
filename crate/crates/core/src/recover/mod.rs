//! Critical-point system, gradient-descent homotopy, validation, and sampling studies.

mod factories;
mod factors;
mod lagrange;
mod pipeline;
mod study;

pub use factors::{interpolate_factors, Factor, FactorTerm, Factorization};
pub use lagrange::{build_lagrange, build_lagrange_reduced, descend, Descent, LagrangeSystem};
pub use pipeline::{
    points_csv, run_problem, run_study, DescentSummary, DetectionSummary, DimensionStep, Report, RunOutput, Seeds,
    Validation,
};
pub use study::{histogram, sample_study, Histogram, StudyOptions, StudyRow, StudySummary};
