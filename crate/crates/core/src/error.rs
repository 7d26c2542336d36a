use thiserror::Error;

/// Errors produced anywhere in the workbench core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unregistered task id {0}")]
    UnknownTask(u32),

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("column `{0}` has no observed values")]
    AllMissing(String),

    #[error("invalid hyperparameter `{name}`: {message}")]
    InvalidParameter { name: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("numerical failure at iteration {iteration}: {message}")]
    Numerical { iteration: usize, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn param(name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad caller input rather than internal failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::UnknownTask(_)
                | Error::Validation { .. }
                | Error::UnknownFeature(_)
                | Error::AllMissing(_)
                | Error::InvalidParameter { .. }
                | Error::DimensionMismatch { .. }
                | Error::NonFinite(_)
                | Error::Empty(_)
                | Error::Unsupported(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
