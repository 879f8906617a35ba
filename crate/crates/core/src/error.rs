use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty vector")]
    Empty,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("negative component {value} at index {index}")]
    Negative { index: usize, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("class {class} has an all-zero weight row")]
    DegenerateClass { class: usize },

    #[error("stream contract violated at step {step}: {reason}")]
    StreamContract { step: u64, reason: String },

    #[error("invalid config at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("validation failed at line {line}: {reason}")]
    Validation { line: usize, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("incompatible format version {found} (supported major {supported})")]
    Version { found: String, supported: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by data that violates a stream's shape contract
    /// (as opposed to bad configuration or I/O failures).
    pub fn is_data_contract(&self) -> bool {
        matches!(
            self,
            Error::Dimension { .. }
                | Error::StreamContract { .. }
                | Error::NonFinite { .. }
                | Error::Negative { .. }
                | Error::DegenerateClass { .. }
                | Error::Parse { .. }
                | Error::Validation { .. }
                | Error::Format(_)
                | Error::Version { .. }
                | Error::Empty
        )
    }
}
