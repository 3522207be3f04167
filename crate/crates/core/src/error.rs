use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation (negative
    /// argument, unordered jumps, missing roots, hypothesis violations).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to produce a trustworthy answer.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The monotone squeeze lost its pointwise ordering.
    #[error("ordering violated at iteration {iteration}: t = {t}, excess = {excess:e}")]
    Ordering { iteration: usize, t: f64, excess: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
            Error::Numeric(_) | Error::Ordering { .. } => 2,
        }
    }
}
