//! Space-time discontinuous Galerkin solver for Green-Naghdi
//! thermoelasticity with operator splitting.

pub mod assembly;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod output;
pub mod stepper;

pub use error::{Error, Phase, Result};
