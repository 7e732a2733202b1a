//! Simulation, identifiability checks and observational estimators for the
//! steerability of consumption in platform-consumer feedback loops.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod identifiability;
pub mod ingest;
pub mod linalg;

pub use error::{Error, Result};

/// Version stamped into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;
