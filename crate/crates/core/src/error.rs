use thiserror::Error;

/// Errors produced by the counting, multiplier, verification and probe layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arithmetic mode mismatch: cannot combine {left:?} and {right:?} spectra")]
    ModeMismatch {
        left: crate::lattice::Mode,
        right: crate::lattice::Mode,
    },

    #[error("budget {budget} exceeds spectrum capacity {capacity}")]
    BudgetOverflow { budget: usize, capacity: usize },

    #[error("{op}: estimated work {cost} exceeds the configured cap {cap}")]
    WorkBudget { op: &'static str, cost: u128, cap: u64 },

    #[error("{op}: {size} enumeration candidates exceed the cap {cap}")]
    EnumerationCap { op: &'static str, size: u128, cap: u64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("floating range exhausted: {0}")]
    Range(String),

    #[error("periodization would wrap: period {period} must exceed {required}")]
    Wraparound { period: usize, required: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for refusals caused by the work or enumeration caps.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::WorkBudget { .. } | Error::EnumerationCap { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
