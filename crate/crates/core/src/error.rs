use std::fmt;

use crate::random::SampleKey;

pub type Result<T> = std::result::Result<T, Error>;

/// Solver diagnostics attached to a blow-up.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowUp {
    pub time: f64,
    pub cell: usize,
    pub reason: &'static str,
}

impl fmt::Display for BlowUp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "solver blow-up at t={} (cell {}, {})", self.time, self.cell, self.reason)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot restrict coarsest level")]
    CoarsestLevel,
    #[error("nonphysical state")]
    NonphysicalState,
    #[error("nonphysical SV parameterization")]
    NonphysicalShockVortex,
    #[error("{0}")]
    BlowUp(BlowUp),
    #[error("{} sample(s) failed: {}", .0.len(), format_failures(.0))]
    SampleFailures(Vec<(SampleKey, String)>),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("component count mismatch: expected {expected}, got {got}")]
    ComponentMismatch { expected: usize, got: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("W1 undefined for signed measures; use wasserstein_to_dirac")]
    SignedMeasure,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("field format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_failures(failures: &[(SampleKey, String)]) -> String {
    failures
        .iter()
        .map(|(key, msg)| format!("[level {} sample {}: {}]", key.level, key.index, msg))
        .collect::<Vec<_>>()
        .join(" ")
}
