//! Parameterized polynomial systems.

mod compiled;
mod parse;
mod polynomial;
mod system;
mod transform;

pub use compiled::CompiledSystem;
pub use parse::{parse_system, to_source};
pub use polynomial::{Monomial, Polynomial};
pub use system::{PolySystem, Role};
pub use transform::{generic_slice, homogenize, homogenize_seeded, randomize, HomogenizationScheme, Slice};
pub(crate) use transform::fresh_names;

#[cfg(test)]
mod proptests;
