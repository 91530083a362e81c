use thiserror::Error;

use crate::lp::LpStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("slot index {index} out of range for {n_slots} slots")]
    IndexOutOfRange { index: usize, n_slots: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("drop count {drops} out of range for {n_slots} slots")]
    DropCountOutOfRange { drops: usize, n_slots: usize },

    #[error("solver requires a drop budget of {expected}, instance has {found}")]
    BudgetMismatch { expected: usize, found: usize },

    #[error("search space of {count} drop sets exceeds the cap of {cap}")]
    CapExceeded { count: u128, cap: u64 },

    #[error("linear program terminated with status {status:?}{}", cycle.map(|c| format!(" in cycle {}", c + 1)).unwrap_or_default())]
    Lp {
        status: LpStatus,
        cycle: Option<usize>,
    },

    #[error("outage level {0} must lie strictly between 0 and 1")]
    InvalidEpsilon(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
