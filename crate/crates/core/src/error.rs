use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group specification: {0}")]
    InvalidGroup(String),

    #[error("group mismatch: expected {expected}, found {found}")]
    GroupMismatch { expected: String, found: String },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    /// Wrong lengths, out-of-range indices and similar shape errors.
    #[error("structural error: {0}")]
    Structural(String),

    /// The input lies outside the domain the operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("state is not alignable")]
    NotAlignable,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("conditional state undefined: relational weight {weight:e} is below tolerance")]
    UndefinedConditional { weight: f64 },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
