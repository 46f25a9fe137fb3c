//! Kawahara equation on a bounded interval with boundary damping and
//! finite-memory feedback.

pub mod banded;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod memory;
pub mod model;
pub mod observability;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
