//! Bernoulli sets, the disjoint partition `{A_i}` driven by the columns of a
//! bit source, and the sets `X_r = ⊔_{n ∈ B_r} A_n`.

mod partition;
mod real;

pub use partition::{build_partition, ColumnSource, PartitionFamily, DEFAULT_INDEX_CAP};
pub use real::{parse_rational, RealSource, RealSpec};

pub(crate) use partition::decide_xr;
pub(crate) use real::reduce;

use crate::error::Result;
use crate::sets::{self, Kind, SetHandle};

/// The Bernoulli set with parameter `r`: `n` is a member iff the `n`-th
/// SplitMix64 draw is below `⌊r · 2^64⌋`. The bias against `r` is below
/// `2^-64`.
pub fn bernoulli_set(r: &RealSpec, seed: u64) -> SetHandle {
    sets::bernoulli_threshold(r.threshold(), seed)
}

/// `bernoulli_set` for a rational `p/q ∈ (0, 1)`.
pub fn bernoulli_ratio(p: u64, q: u64, seed: u64) -> Result<SetHandle> {
    Ok(bernoulli_set(&RealSpec::from_ratio(p, q)?, seed))
}

/// The bits of `r` as a set, e.g. `3/4 ↦ {0, 1}`.
pub fn real_to_bits(spec: &str) -> Result<RealSpec> {
    RealSpec::parse(spec)
}

/// `X_r`: `m ∈ X_r` iff the partition piece containing `m` has an index in
/// `B_r`.
pub fn build_xr(r: &RealSpec, part: &PartitionFamily) -> SetHandle {
    SetHandle::from_kind(
        Kind::Xr {
            real: r.clone(),
            family: part.clone(),
        },
        part.budget(),
    )
}

/// `⊔_{i ∈ B_r, i < j} A_i`, the truncation of `X_r` to the first `j` pieces.
pub fn truncated_xr(r: &RealSpec, part: &PartitionFamily, j: usize) -> Result<SetHandle> {
    let mut acc = sets::empty().with_budget(part.budget());
    for i in 0..j {
        if r.bit(i as u64) {
            acc = sets::union(&acc, &part.a(i)?);
        }
    }
    Ok(acc)
}
