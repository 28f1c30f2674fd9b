use qf_core::QfError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] QfError),

    #[error("config: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("output directory {path}: {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },

    /// Stored energy disagrees with the recomputed one.
    #[error("energy mismatch: claimed {claimed}, recomputed {recomputed}")]
    Mismatch { claimed: f64, recomputed: f64 },

    #[error("empty input: {0}")]
    Empty(String),
}

impl BenchError {
    /// Tag printed in `error[<kind>]` lines.
    pub fn kind(&self) -> &'static str {
        match self {
            BenchError::Core(e) => e.kind(),
            BenchError::Config(_) => "config",
            BenchError::Csv(_) | BenchError::Json(_) => "format",
            BenchError::Io(_) | BenchError::Output { .. } => "io",
            BenchError::Mismatch { .. } => "mismatch",
            BenchError::Empty(_) => "validation",
        }
    }
}
