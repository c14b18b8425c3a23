use thiserror::Error;

/// Errors raised by the analyzer and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A data structure was handed to an operation that requires more than it carries.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An integral or root search failed to converge.
    #[error("numerical failure in {what}: {diagnostics}")]
    Numerical {
        what: &'static str,
        diagnostics: String,
    },

    /// A configuration file or override could not be parsed.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    /// Sampling could not produce a valid realization within the retry budget.
    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be finite and >= 0, got {value}"),
        ))
    }
}
