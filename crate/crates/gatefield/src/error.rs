//! Error type shared across the crate.

use crate::krotov::IterationRecord;

/// Crate-wide error enum.
///
/// `Monotonicity` carries the diagnostic record of the offending iteration so
/// a caller (or the CLI) can report exactly where the descent guarantee broke
/// — that always signals a propagation-accuracy or time-grid problem, not a
/// tolerable numerical hiccup.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid argument or inconsistent object state.
    #[error("validation: {0}")]
    Validation(String),

    /// Malformed configuration; `key` names the offending entry.
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    /// Numerical failure (non-finite values, tolerance blow-up, ...).
    #[error("numeric: {0}")]
    Numeric(String),

    /// Objective increased beyond tolerance between iterations.
    #[error(
        "monotonic descent violated at iteration {}: J rose by {rise:.3e} (tolerance {tolerance:.1e}); \
         check time grid resolution and propagator accuracy",
        record.iteration
    )]
    Monotonicity {
        record: Box<IterationRecord>,
        rise: f64,
        tolerance: f64,
    },

    /// Scaling-law fit cannot be performed on the given points.
    #[error("scaling fit: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for a config error tied to a specific key.
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
