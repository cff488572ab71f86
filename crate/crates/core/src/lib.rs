//! Empirical natural-gradient training of physics-informed networks with
//! spectral cutoff selection driven by reconstruction-error curves.

pub mod autodiff;
pub mod checks;
pub mod diagnostics;
pub mod error;
pub mod optimizer;
pub mod problems;
pub mod spectral;

pub use error::{Error, Result};
