use thiserror::Error;

/// Errors raised by the model, the simulator and the driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate post-selection: overlap {overlap:e} is at or below threshold {threshold:e}")]
    DegeneratePostSelection { overlap: f64, threshold: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("measurement resolution {0:e} is too close to zero for the estimator")]
    ZeroResolution(f64),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("input is unpolarized along {axis} (stokes = {value:e})")]
    UnpolarizedInput { axis: &'static str, value: f64 },

    #[error("no post-selected counts")]
    NoPostSelectedCounts,

    #[error("parse error on line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("invalid value for `{key}`: {message}")]
    ValidationError { key: String, message: String },
}

impl Error {
    pub(crate) fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ValidationError {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
