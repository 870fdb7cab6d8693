use std::fmt;

use thiserror::Error;

/// Which half of an [`EvaluationBudget`](crate::EvaluationBudget) ran out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resource {
    Value,
    Index,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resource::Value => f.write_str("value"),
            Resource::Index => f.write_str("index"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetError {
    #[error("budget exhausted: {resource} {requested} exceeds limit {limit}")]
    BudgetExhausted {
        resource: Resource,
        requested: u64,
        limit: u64,
    },
    #[error("set exhausted: index {index} requested but the set has only {len} elements")]
    SetExhausted { index: u64, len: u64 },
    #[error("{value} lies in no partition piece below the index cap {cap}")]
    IndexCapExceeded { value: u64, cap: usize },
    #[error("injectivity violation: {first} and {second} both map to {value}")]
    InjectivityViolation { first: u64, second: u64, value: u64 },
    #[error("fill values exhausted at fill position {position}")]
    FillExhausted { position: u64 },
    #[error("construction halted after {reached} elements: {cause}")]
    Halted {
        reached: usize,
        cause: Box<SetError>,
    },
    #[error("domain error: {0}")]
    Domain(String),
}

impl SetError {
    pub(crate) fn value(requested: u64, limit: u64) -> Self {
        SetError::BudgetExhausted {
            resource: Resource::Value,
            requested,
            limit,
        }
    }

    pub(crate) fn index(requested: u64, limit: u64) -> Self {
        SetError::BudgetExhausted {
            resource: Resource::Index,
            requested,
            limit,
        }
    }

    /// True for errors caused by running out of budget, including a halted
    /// construction whose underlying cause was a budget error.
    pub fn is_budget(&self) -> bool {
        match self {
            SetError::BudgetExhausted { .. } => true,
            SetError::Halted { cause, .. } => cause.is_budget(),
            _ => false,
        }
    }
}

pub type Result<T, E = SetError> = std::result::Result<T, E>;
