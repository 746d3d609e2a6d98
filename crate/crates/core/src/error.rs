use thiserror::Error;

/// Errors raised when an operation's preconditions are not met.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("work budget exceeded: {needed} > {budget}")]
    BudgetExceeded { needed: f64, budget: f64 },

    #[error("level {level} too deep for base {base} (max {max})")]
    LevelTooDeep { level: u32, base: u32, max: u32 },

    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(u32, u32),

    #[error("base mismatch: {0} vs {1}")]
    BaseMismatch(u32, u32),

    #[error("conditioning cell has zero mass")]
    ZeroMass,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
