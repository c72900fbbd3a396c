//! Numerical laboratory for the kicked Lipkin–Meshkov–Glick model.

pub mod classical;
pub mod diagnostics;
pub mod epsmax;
pub mod error;
pub mod floquet;
pub mod linalg;
pub mod lmg;
pub mod resonance;
pub mod scaling;
pub mod spin;
pub mod upt;

pub use error::{Error, Result};
