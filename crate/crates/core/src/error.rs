use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The chain's constraint set looks empty (too many consecutive rejections).
    #[error("infeasible constraints: {0}")]
    Feasibility(String),
    /// Rejection sampling would almost never accept; the message says what to use instead.
    #[error("rejection acceptance {acceptance:.3e} too low: {guidance}")]
    LowAcceptance { acceptance: f64, guidance: String },
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
