//! Monte-Carlo and multilevel Monte-Carlo approximation of entropy
//! measure-valued solutions of hyperbolic conservation laws.
//!
//! Random initial data is sampled with a counter-based generator, every sample
//! is evolved by a deterministic finite-volume scheme, and the resulting
//! ensemble is kept as a (possibly signed) empirical measure from which
//! statistics and functionals are read off.

pub mod error;
pub mod estimators;
pub mod fit;
pub mod fvm;
pub mod grid;
pub mod metrics;
pub mod random;
pub mod relaxation;
pub mod workers;

pub use error::{Error, Result};
pub use grid::{EulerState, Field, Grid, Primitive, GAMMA};
pub use workers::Workers;
