use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("reserve depletion: post-trade token-1 reserve would be {0}")]
    ReserveDepletion(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("population mismatch: {0}")]
    PopulationMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
