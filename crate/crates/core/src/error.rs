use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("non-finite value in {what} at flat index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("grid mismatch: expected n = {expected}, found n = {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("flow domain violated at t = {t}: 1 + |x|^2 (e^(2t) - 1) = {denominator} <= 0")]
    FlowDomain { t: f64, denominator: f64 },

    #[error("invalid flow parameters: {0}")]
    Params(String),

    #[error("step {step} (t = {t}) produced a non-finite field")]
    StepDiverged { step: u64, t: f64 },

    #[error("run failed at t = {t}: {source}")]
    RunFailed {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("initial datum rejected: alpha0 = {alpha0:.3e} ({reason})")]
    Certification { alpha0: f64, reason: String },

    #[error("tracking failed at t = {t}: {reason}")]
    Tracking { t: f64, reason: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config: {0}")]
    Config(String),

    #[error("snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
