use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input shape: non-square matrices, dangling ids, length mismatches.
    #[error("structural error: {0}")]
    Structure(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid session state: {0}")]
    State(String),
    #[error("linear program: {0}")]
    Lp(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
