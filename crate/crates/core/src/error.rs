use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("combinatorial guard tripped: {count} candidates exceeds limit {limit}")]
    Blowup { count: u128, limit: u128 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("divergent covering profile: {0}")]
    DivergentProfile(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
