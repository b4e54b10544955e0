use thiserror::Error;

/// Errors raised across the wiretap code pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (lengths, widths, ranges).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Zero has no multiplicative inverse; it is also excluded from the seed set.
    #[error("element {0:#x} has no multiplicative inverse")]
    NonInvertible(u32),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training failed at epoch {epoch}: {reason}")]
    TrainingFailure { epoch: usize, reason: String },

    #[error("inconsistent estimate: {0}")]
    InconsistentEstimate(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! contract {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::Contract(format!($($arg)+)));
        }
    };
}
pub(crate) use contract;
