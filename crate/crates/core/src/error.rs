use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} values but the grid has {expected} points")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("unsupported derivative order {0} (expected 1 to 4)")]
    UnsupportedOrder(u32),

    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("operation requires a periodic grid")]
    NotPeriodic,

    #[error("operation requires an interval grid")]
    NotInterval,

    #[error("field mean {mean:e} must vanish for a negative power")]
    NonzeroMean { mean: f64 },

    #[error("norm exponent {0} must be at least 1")]
    InvalidExponent(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("grid incompatible with model: {0}")]
    IncompatibleGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("kernel domain too small: {0}")]
    KernelDomain(String),

    #[error("too few envelope peaks for a decay fit ({found} found, {needed} needed)")]
    TooFewPeaks { found: usize, needed: usize },

    #[error("trajectory has no `{0}` monitor")]
    MissingMonitor(String),

    #[error("Picard iteration diverged at iteration {iteration} (difference {difference:e})")]
    PicardDivergence { iteration: usize, difference: f64 },

    #[error("velocity is not divergence free (max |div v| = {0:e})")]
    NotSolenoidal(f64),

    #[error("beta = {0} is not positive; the Volterra bound does not apply")]
    NonPositiveBeta(f64),

    #[error("line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("unknown config key `{key}` (line {line})")]
    UnknownKey { key: String, line: usize },

    #[error("invalid value for `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("checkpoint does not match the run: {0}")]
    CheckpointMismatch(String),

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::ConfigSyntax { .. } | Error::UnknownKey { .. } | Error::ConfigValue { .. }
        )
    }
}
