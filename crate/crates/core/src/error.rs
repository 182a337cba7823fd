use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the game model, the solver and the mechanism checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bet #{index} is {bet}, bets must be positive")]
    NonPositiveBet { index: usize, bet: f64 },

    #[error("bet #{index} is {bet}, bets must stay below the award {award}")]
    BetExceedsAward { index: usize, bet: f64, award: f64 },

    #[error("type #{index} is {value}, types must lie in (0, 1)")]
    TypeOutOfRange { index: usize, value: f64 },

    #[error("type profile is empty")]
    EmptyProfile,

    #[error("attacker index {index} out of bounds for {len} attackers")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("effort {effort} outside [0, {e_max})")]
    EffortOutOfRange { effort: f64, e_max: f64 },

    #[error("attack result {0} outside [0, 1]")]
    ResultOutOfRange(f64),

    #[error("own effort {effort} exceeds the total {total}")]
    EffortExceedsTotal { effort: f64, total: f64 },

    #[error("transaction count must be at least 1, got {0}")]
    InvalidTransactionCount(u32),

    #[error("split parts sum to {got}, expected {expected}")]
    SplitMismatch { expected: f64, got: f64 },

    #[error("split part #{index} is {value}, parts must be positive")]
    InvalidSplitPart { index: usize, value: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("invariant `{check}` violated (seed {seed}, replicate {replicate}): {detail}")]
    InvariantViolation {
        check: &'static str,
        seed: u64,
        replicate: u64,
        detail: String,
    },
}
