use serde::{Deserialize, Serialize};

use crate::error::{Result, SetError};

/// Upper limits on how far an evaluation may reach.
///
/// `max_value` is the largest natural number whose membership may be
/// decided; `max_index` is the largest enumeration index that may be
/// requested. Queries past either limit fail with
/// [`SetError::BudgetExhausted`] instead of returning a truncated answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvaluationBudget {
    pub max_value: u64,
    pub max_index: u64,
}

impl EvaluationBudget {
    pub const DEFAULT_MAX: u64 = 100_000_000;

    pub const fn new(max_value: u64, max_index: u64) -> Self {
        EvaluationBudget {
            max_value,
            max_index,
        }
    }

    pub(crate) fn check_value(&self, n: u64) -> Result<()> {
        if n > self.max_value {
            Err(SetError::value(n, self.max_value))
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_index(&self, k: u64) -> Result<()> {
        if k > self.max_index {
            Err(SetError::index(k, self.max_index))
        } else {
            Ok(())
        }
    }

    /// Exclusive upper end of the decidable range `[0, max_value]`.
    pub(crate) fn len_limit(&self) -> u64 {
        self.max_value.saturating_add(1)
    }

    /// Checks that the half-open range `[0, hi)` is decidable.
    pub(crate) fn check_len(&self, hi: u64) -> Result<()> {
        if hi > self.len_limit() {
            Err(SetError::value(hi - 1, self.max_value))
        } else {
            Ok(())
        }
    }
}

impl Default for EvaluationBudget {
    fn default() -> Self {
        EvaluationBudget::new(Self::DEFAULT_MAX, Self::DEFAULT_MAX)
    }
}
