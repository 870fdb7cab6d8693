//! Computably presented subsets of ω: lazy set combinators (`into`, `within`,
//! join, boolean algebra, columns), permutations of ω, seeded random
//! constructions, and exact-rational density estimation.
//!
//! Set handles evaluate on demand and memoize what they learn. Every query
//! runs under an [`EvaluationBudget`]; going past it is an error, never a
//! truncated answer.
//!
//! ```
//! use densets::sets::{evens, into, odds};
//!
//! let every_other_odd = into(&evens(), &odds());
//! assert_eq!(every_other_odd.prefix(14).unwrap(), vec![1, 5, 9, 13]);
//! ```

pub mod bits;
pub mod budget;
pub mod constructions;
pub mod density;
pub mod error;
pub mod expr;
pub mod laws;
pub mod par;
pub mod permutations;
pub mod sets;

pub use bits::BitSource;
pub use budget::EvaluationBudget;
pub use constructions::{PartitionFamily, RealSpec};
pub use density::{DensityReport, Grid};
pub use error::{Result, SetError};
pub use expr::{Expr, ExprError};
pub use permutations::{PermSpec, PermutationHandle};
pub use sets::SetHandle;
