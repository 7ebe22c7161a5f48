use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the reduction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("model evaluation produced a non-finite value at state index {index}")]
    NonFinite { index: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("trim did not converge after {iterations} iterations (residual norm {residual_norm:e})")]
    TrimFailure {
        iterations: usize,
        residual_norm: f64,
    },
    #[error("singular Newton step in trim solve")]
    SingularTrim,
    #[error("non-finite Jacobian column for state {index}")]
    JacobianColumn { index: usize },
    #[error("reduction failed: {0}")]
    Reduction(String),
    #[error("defective or ill-conditioned eigenvector for mode {mode} (lambda = {lambda})")]
    Defective { mode: usize, lambda: String },
    #[error("basis selection: requested {requested} {kind} modes but only {available} available")]
    Selection {
        kind: &'static str,
        requested: usize,
        available: usize,
    },
    #[error("finite-difference sample {sample} produced a non-finite residual")]
    FiniteDifference { sample: usize },
    #[error("integration diverged at t = {time}")]
    Divergence { time: f64 },
    #[error("singular matrix: {0}")]
    Singular(&'static str),
    #[error("archive error in {path}: {reason}")]
    Archive { path: PathBuf, reason: String },
    #[error("unknown {kind} `{name}` (known: {known})")]
    Unknown {
        kind: &'static str,
        name: String,
        known: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
