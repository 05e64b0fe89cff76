use thiserror::Error;

/// Errors raised by the solver, simulator and checkers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid probability {value} for {what}")]
    InvalidProbability { what: &'static str, value: f64 },

    #[error("degenerate chain: p11 = 1 and p01 = 0 has no unique stationary belief")]
    DegenerateChain,

    #[error("channel index {index} out of range for {n} channels")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("belief vector must have at least one entry")]
    EmptyVector,

    #[error("key quantum must be positive, got {0}")]
    NonpositiveQuantum(f64),

    #[error("horizon must be at least one decision epoch")]
    HorizonZero,

    #[error("operation requires a finite horizon")]
    InfiniteHorizon,

    #[error("stage {t} exceeds horizon {horizon}")]
    StageBeyondHorizon { t: usize, horizon: usize },

    #[error("no stage-{stage} value for a successor state")]
    MissingSuccessorValue { stage: usize },

    #[error("policy has no action for a reachable state at stage {stage}")]
    PolicyUndefined { stage: usize },

    #[error("discount factor {0} must lie in [0, 1)")]
    BetaNotLessThanOne(f64),

    #[error("discount factor {0} must lie in [0, 1]")]
    InvalidBeta(f64),

    #[error("tolerance must be positive, got {0}")]
    NonpositiveTolerance(f64),

    #[error("ergodicity violated: {0} is not below 1")]
    ErgodicityViolated(String),

    #[error("reachable belief set exceeded {limit} states")]
    StateLimitExceeded { limit: usize },

    #[error("iteration did not converge within {iterations} sweeps (residual {residual})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("sample path is {rows}x{cols}, instance expects {n}x{horizon}")]
    DimensionMismatch { rows: usize, cols: usize, n: usize, horizon: usize },

    #[error("at least one replication is required")]
    ZeroReps,

    #[error("invalid swap position {position} for {n} channels")]
    InvalidPosition { position: usize, n: usize },

    #[error("invalid channel index {index} for {n} channels")]
    InvalidIndex { index: usize, n: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

pub type Result<T> = std::result::Result<T, Error>;
