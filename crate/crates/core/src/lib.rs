//! Nearest exceptional parameters for parameterized polynomial systems.
//!
//! Given a family `f(x; p)` and a parameter point `p_hat` that is only known
//! approximately, the library detects which special structure the solution set
//! appears to have (solutions at infinity, positive-dimensional components,
//! reducible components, higher multiplicity), builds a fiber-product system
//! that imposes that structure, and tracks a gradient-descent homotopy to the
//! nearest parameter values where it actually holds.

pub mod algebra;
pub mod error;
pub mod fiberprod;
pub mod numlin;
pub mod problem;
pub mod recover;
pub mod rng;
pub mod structure;
pub mod tracker;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
