use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("infeasible point: {0}")]
    Infeasible(String),
    #[error("invalid active set: {0}")]
    InvalidActiveSet(String),
    #[error("numeric consistency: {0}")]
    NumericConsistency(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("retraction undefined: {0}")]
    RetractionUndefined(String),
    #[error("inner loop did not terminate after {0} steps")]
    NonTermination(usize),
    #[error("unsupported domain/method pair: {0}")]
    UnsupportedPair(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
