use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("constraint violation: {0}")]
    InvalidConstants(String),
    #[error("client index {index} out of range for {clients} clients")]
    ClientIndex { index: usize, clients: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },
    #[error("no unique minimizer: {0}")]
    NoUniqueMinimizer(String),
    #[error("topology validation failed: {0}")]
    Topology(String),
    #[error("operation requires quadratic clients")]
    NotQuadratic,
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("divergence in round {round} (step size {step}): {detail}")]
    Divergence { round: usize, step: f64, detail: String },
    #[error("inner solver exhausted {rounds} rounds with gap {achieved:e} above target {target:e}")]
    BudgetExceeded { rounds: usize, achieved: f64, target: f64 },
    #[error("rate fit: {0}")]
    Fit(String),
}

pub type Result<T> = core::result::Result<T, Error>;
