use thiserror::Error;

pub type Result<T> = std::result::Result<T, QfError>;

#[derive(Debug, Error)]
pub enum QfError {
    #[error("validation: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A candidate solution holds something other than 0 or 1.
    #[error("structure: entry {index} is {value}, expected 0 or 1")]
    NonBinary { index: usize, value: i64 },

    #[error("brute force is capped at n <= {cap}, got n = {n}")]
    TooLarge { n: usize, cap: usize },

    #[error("format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl QfError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        QfError::Validation(msg.into())
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            QfError::Validation(_) => "validation",
            QfError::DimensionMismatch { .. } => "dimension",
            QfError::NonBinary { .. } => "structure",
            QfError::TooLarge { .. } => "validation",
            QfError::Format(_) => "format",
            QfError::Io(_) => "io",
        }
    }
}
