use thiserror::Error;

/// Errors raised by contract violations and invalid model inputs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shift amount {0} out of range 0..=31")]
    ShiftOutOfRange(u32),

    #[error("vector length {0} must be a positive multiple of 32")]
    BadVectorLength(usize),

    #[error("value {0} out of range for a {1} 4-bit element")]
    NibbleOutOfRange(i32, &'static str),

    #[error("operands disagree: {0}")]
    OperandMismatch(String),

    #[error("kernel does not link: {needed} instructions exceed IRAM capacity of {capacity}")]
    IramOverfill { needed: u64, capacity: u64 },

    #[error("invalid benchmark combination: {0}")]
    InvalidCombination(String),

    #[error("tasklet count {0} outside 1..={0}")]
    TaskletsOutOfRange(u32),

    #[error("cycles per element must be positive")]
    NonPositiveCycles,

    #[error("baseline throughput is zero")]
    ZeroBaseline,

    #[error("cannot allocate {requested} ranks: {available} available")]
    AllocationFailure { requested: usize, available: usize },

    #[error("rank count {0} outside {1}..={2}")]
    RankCountOutOfRange(usize, usize, usize),

    #[error("rank set is empty")]
    EmptyRankSet,

    #[error("transfer size must be positive")]
    EmptyTransfer,

    #[error("infeasible GEMV plan: {0}")]
    InfeasiblePlan(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed binary input: {0}")]
    BadFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
