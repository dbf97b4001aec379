use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulation and verification engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("axis singularity: field value {value:e} at r = 0 must vanish")]
    AxisSingularity { value: f64 },

    #[error("unit-norm violation: max | |phi| - 1 | = {max_deviation:e}")]
    UnitNormViolation { max_deviation: f64 },

    #[error("sample point with horizontal radius {radius} lies outside [0, {r_max}]")]
    OutOfDomain { radius: f64, r_max: f64 },

    #[error("degenerate gauge frame at node {index} (projected length {length:e})")]
    DegenerateFrame { index: usize, length: f64 },

    #[error("tangency violation at node {index}: normal component {value:e}")]
    TangencyViolation { index: usize, value: f64 },

    #[error("modulation extraction did not converge after {iterations} iterations (constraint {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("decomposition breakdown: {0}")]
    DecompositionBreakdown(String),

    #[error("stability failure at t = {t}: renormalization correction {correction:e}")]
    StabilityFailure { t: f64, correction: f64 },

    #[error("NaN detected in state at t = {t}")]
    NanDetected { t: f64 },

    #[error("eigensolver failure: {0}")]
    EigensolverFailure(String),

    #[error("insufficient window: need {needed} records, found {found}")]
    InsufficientWindow { needed: usize, found: usize },

    #[error("insufficient samples: need {needed}, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("nonpositive value {value:e} at sample {index}")]
    NonpositiveValue { index: usize, value: f64 },

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config validation error in `{field}`: {message}")]
    ConfigValidation { field: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::SizeMismatch { expected, found })
    }
}
