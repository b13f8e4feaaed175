use alloc::string::String;
use alloc::vec::Vec;

/// Errors produced by the constructions and checks in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data for {what}: need {needed}, have {available}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("code {code:?} is not present in the tree")]
    NotFound { code: Vec<u32> },

    #[error("target dimension {alpha} is unreachable; the maximum for rho in (0, 1/2] is {max}")]
    InfeasibleTarget { alpha: f64, max: f64 },

    #[error("k_max = {k_max} is too deep for resolution {delta} (deepest admissible level is {max_level})")]
    Resolution { k_max: usize, delta: f64, max_level: usize },

    #[error("partition construction failed at level {level}, cube {cube}: {property}")]
    ConstructionFailure {
        level: usize,
        cube: usize,
        property: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("no witness cylinder found (scanned levels up to {deepest_scan})")]
    WitnessNotFound { deepest_scan: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
