//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps variants to exit codes: budget/resource problems exit 3,
/// everything else exits 1 (config problems have their own type and exit 2).
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A computation would exceed its point or memory budget. `required`
    /// reports the size the caller would have to grant.
    #[error("budget exceeded in {what}: requires {required}, budget {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        budget: u128,
    },

    /// A mathematical hypothesis of the requested operation is violated.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    /// Two routes that must agree disagreed beyond tolerance. Always fatal.
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("tolerance not achieved: requested {requested:e}, achieved {achieved:e} in {what}")]
    ToleranceNotAchieved {
        what: &'static str,
        requested: f64,
        achieved: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Non-convergent local factor or similar diagnostic condition.
    #[error("diagnostic: {0}")]
    Diagnostic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
