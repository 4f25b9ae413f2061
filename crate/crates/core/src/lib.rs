//! Radial bound states of scalar-field equations and their transfer to
//! Kirchhoff-type problems.

pub mod envelope;
pub mod error;
pub mod format;
pub mod functionals;
pub mod nonlinearity;
pub mod runner;
pub mod shooter;
pub mod transfer;

pub use error::{FieldlabError, Result};
