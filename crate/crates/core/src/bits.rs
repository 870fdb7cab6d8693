//! Seeded bit sources.
//!
//! Every pseudorandom set in the crate is driven by SplitMix64 in counter
//! form: the `n`-th output of the stream seeded with `seed` is
//! `mix(seed + (n + 1) * GOLDEN_GAMMA)`, so membership of any `n` is
//! decided in constant time without walking the stream.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::budget::EvaluationBudget;
use crate::sets::{self, SetHandle};

/// SplitMix64 increment (the odd integer closest to 2^64 / phi).
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_MUL_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_MUL_2: u64 = 0x94D0_49BB_1331_11EB;

/// The SplitMix64 output finalizer.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_MUL_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_MUL_2);
    z ^ (z >> 31)
}

/// The `n`-th (0-indexed) output of SplitMix64 started from state `seed`.
#[inline]
pub fn draw(seed: u64, n: u64) -> u64 {
    mix(seed.wrapping_add(n.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed of the `i`-th derived column: `seed ^ (i + 1) * GOLDEN_GAMMA`.
#[inline]
pub fn child_seed(seed: u64, i: u64) -> u64 {
    seed ^ i.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)
}

/// Draw threshold giving probability exactly one half.
pub const HALF: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnMode {
    /// Column `i` is an independent stream seeded with [`child_seed`].
    Derived,
    /// Column `i` is `{n : pair(i, n) ∈ X}` for the master stream `X`.
    Pairing,
}

/// A deterministic stand-in for a random set `X` together with its columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitSource {
    pub seed: u64,
    pub mode: ColumnMode,
}

impl BitSource {
    pub fn new(seed: u64) -> Self {
        BitSource {
            seed,
            mode: ColumnMode::Derived,
        }
    }

    pub fn pairing(seed: u64) -> Self {
        BitSource {
            seed,
            mode: ColumnMode::Pairing,
        }
    }

    /// The master stream as a set: `n ∈ X` iff draw `n` is below one half.
    pub fn stream(&self, budget: EvaluationBudget) -> SetHandle {
        sets::bernoulli_threshold(HALF, self.seed).with_budget(budget)
    }

    /// The column `X^[i]`.
    pub fn column(&self, i: u32, budget: EvaluationBudget) -> SetHandle {
        match self.mode {
            ColumnMode::Derived => {
                sets::bernoulli_threshold(HALF, child_seed(self.seed, i as u64)).with_budget(budget)
            }
            ColumnMode::Pairing => sets::column(&self.stream(budget), i),
        }
    }
}

impl fmt::Display for BitSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            ColumnMode::Derived => write!(f, "seed:{}", self.seed),
            ColumnMode::Pairing => write!(f, "seed:{},mode=pairing", self.seed),
        }
    }
}

impl FromStr for BitSource {
    type Err = String;

    /// Parses `seed:<n>[,mode=derived|pairing]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rest = s
            .strip_prefix("seed:")
            .ok_or_else(|| format!("bit source must start with `seed:`, got `{s}`"))?;
        let (seed, mode) = match rest.split_once(',') {
            None => (rest, ColumnMode::Derived),
            Some((seed, opt)) => {
                let mode = match opt {
                    "mode=derived" => ColumnMode::Derived,
                    "mode=pairing" => ColumnMode::Pairing,
                    other => return Err(format!("unknown bit source option `{other}`")),
                };
                (seed, mode)
            }
        };
        let seed = seed.parse().map_err(|_| format!("invalid seed `{seed}`"))?;
        Ok(BitSource { seed, mode })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_outputs() {
        // First outputs of the reference SplitMix64 generator with state 0.
        assert_eq!(draw(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(draw(0, 1), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(draw(0, 2), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn child_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| child_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn bit_source_strings() {
        assert_eq!("seed:42".parse::<BitSource>().unwrap(), BitSource::new(42));
        assert_eq!(
            "seed:3,mode=pairing".parse::<BitSource>().unwrap(),
            BitSource::pairing(3)
        );
        assert!("seed:x".parse::<BitSource>().is_err());
        assert!("seed:1,mode=other".parse::<BitSource>().is_err());
        for src in [BitSource::new(9), BitSource::pairing(9)] {
            assert_eq!(src.to_string().parse::<BitSource>().unwrap(), src);
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let b = EvaluationBudget::default();
        let x = BitSource::new(5).stream(b).prefix(1000).unwrap();
        let y = BitSource::new(5).stream(b).prefix(1000).unwrap();
        assert_eq!(x, y);
        let z = BitSource::new(6).stream(b).prefix(1000).unwrap();
        assert_ne!(x, z);
    }
}
