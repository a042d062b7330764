use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("instance too large for exhaustive enumeration: N+K = {size} exceeds limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("statistical test is undefined: {0}")]
    DegenerateTest(String),

    #[error("conditioning event too rare: acceptance rate {rate:.3e} after {attempts} attempts")]
    Infeasible { rate: f64, attempts: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
