use alloc::string::String;

/// Errors produced by the core model and algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CpError {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("agent {agent}: demand {value} at interval {interval} outside [{lower}, {upper}]")]
    BoundViolation {
        agent: u32,
        interval: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("negative demand {value} in {what} at interval {interval}")]
    NegativeDemand {
        what: &'static str,
        interval: usize,
        value: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("total load over the peak set is zero")]
    ZeroPeakLoad,
    #[error("reference peak demand must be positive, got {0}")]
    NonPositiveReference(f64),
    #[error("insufficient headroom: need {needed}, available {available}")]
    InsufficientHeadroom { needed: f64, available: f64 },
    #[error("agent {agent}: infeasible action")]
    InfeasibleAction { agent: u32 },
    #[error("no library entry matches the frozen prefix")]
    EmptyLibrary,
    #[error("grid too short: need at least {needed} intervals, found {found}")]
    GridTooShort { needed: usize, found: usize },
}

pub type Result<T> = core::result::Result<T, CpError>;
