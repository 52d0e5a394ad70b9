use thiserror::Error;

/// Errors produced by mechanism construction, cost evaluation and auditing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: input {0} is not finite")]
    NonFinite(f64),

    #[error("invalid cost function: {0}")]
    InvalidCost(String),

    #[error("cost function `{0}` has no closed form for this mechanism; use the quadrature path")]
    Unsupported(String),

    #[error("expected cost tail cannot be certified: {0}")]
    Uncertifiable(String),

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
