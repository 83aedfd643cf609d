use thiserror::Error;

/// Errors raised by the online learners and their building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coin flip {0} is outside [-1, 1]")]
    FlipOutOfRange(f64),

    #[error("sleeping bettor received nonzero flip {0}")]
    SleepingFlip(f64),

    #[error("loss {value} at index {index} is outside [0, 1]")]
    LossOutOfRange { index: usize, value: f64 },

    #[error("no expert is awake")]
    EmptyAwakeSet,

    #[error("potential overflows f64 (log value {log_value})")]
    Overflow { log_value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gradient norm {norm} exceeds the Lipschitz bound {bound}")]
    GradientTooLarge { norm: f64, bound: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("time index must be at least 1")]
    ZeroTime,

    #[error("observe called without a pending prediction")]
    NoPendingPrediction,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
