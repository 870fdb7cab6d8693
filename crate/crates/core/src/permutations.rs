//! Computable permutations of ω, evaluated lazily in input order.
//!
//! Forward values are computed for inputs `0, 1, 2, …` and memoized; each new
//! value is recorded in an inverse table, which is where injectivity is
//! checked. The inverse of `m` is found by scanning forward until `m` is hit.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::budget::EvaluationBudget;
use crate::error::{Result, SetError};
use crate::sets::{self, factorials_at_most, SetHandle, FACTORIALS};

/// Forward value standing for "too large for a `u64`" (only produced by the
/// factorial half of [`join_hat`]).
pub const SATURATED: u64 = u64::MAX;

const NO_PREIMAGE: u64 = u64::MAX;
/// Values below this are inverted through a dense table, the rest via a map.
const DENSE_INVERSE_LIMIT: u64 = 1 << 24;

/// `g_j`, the `j`-th element of `ω ∖ {n! : n ∈ ω}`.
pub fn nonfactorial(j: u64) -> u64 {
    let mut g = j;
    loop {
        let next = j + factorials_at_most(g);
        if next == g {
            return g;
        }
        g = next;
    }
}

/// How the map `f` of a patched bijection acts on the domain `C`.
#[derive(Clone)]
pub enum PatchMap {
    /// `f(c_n) = n`, the order isomorphism from `C` onto ω.
    Index,
    /// `f(c_n) = π(n)`.
    IndexThen(PermutationHandle),
    /// An arbitrary injection on `C`; the caller supplies `f(H)` as a set.
    Custom {
        f: Rc<dyn Fn(u64) -> u64>,
        image_of_patched: SetHandle,
    },
}

struct Patch {
    domain: SetHandle,
    patched: SetHandle,
    map: PatchMap,
    fill: SetHandle,
}

enum PermKind {
    Identity,
    BlockShuffle { width: u64, seed: u64 },
    JoinHat(PermutationHandle),
    Patched(Patch),
    Composed(Vec<PermutationHandle>),
    Custom(Rc<dyn Fn(u64) -> u64>),
}

#[derive(Default)]
struct PermMemo {
    forward: Vec<u64>,
    dense_inverse: Vec<u64>,
    sparse_inverse: HashMap<u64, u64>,
    /// Least value not yet known to have a preimage.
    frontier: u64,
    fills: u64,
    block: Option<(u64, Vec<u64>)>,
}

impl PermMemo {
    fn preimage(&self, v: u64) -> Option<u64> {
        if v < DENSE_INVERSE_LIMIT {
            match self.dense_inverse.get(v as usize) {
                Some(&p) if p != NO_PREIMAGE => Some(p),
                _ => None,
            }
        } else {
            self.sparse_inverse.get(&v).copied()
        }
    }

    fn record(&mut self, x: u64, v: u64) -> Result<()> {
        debug_assert_eq!(x, self.forward.len() as u64);
        if v != SATURATED {
            if let Some(first) = self.preimage(v) {
                return Err(SetError::InjectivityViolation {
                    first,
                    second: x,
                    value: v,
                });
            }
            if v < DENSE_INVERSE_LIMIT {
                let idx = v as usize;
                if idx >= self.dense_inverse.len() {
                    self.dense_inverse.resize(idx + 1, NO_PREIMAGE);
                }
                self.dense_inverse[idx] = x;
            } else {
                self.sparse_inverse.insert(v, x);
            }
            while self.preimage(self.frontier).is_some() {
                self.frontier += 1;
            }
        }
        self.forward.push(v);
        Ok(())
    }
}

struct PermNode {
    kind: PermKind,
    label: String,
    memo: RefCell<PermMemo>,
}

/// A lazily evaluated injection ω → ω with memoized forward and inverse maps.
#[derive(Clone)]
pub struct PermutationHandle(Rc<PermNode>);

impl fmt::Debug for PermutationHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.0.memo.borrow();
        f.debug_struct("PermutationHandle")
            .field("label", &self.0.label)
            .field("evaluated", &m.forward.len())
            .field("frontier", &m.frontier)
            .finish()
    }
}

impl PermutationHandle {
    fn new(kind: PermKind, label: String) -> Self {
        PermutationHandle(Rc::new(PermNode {
            kind,
            label,
            memo: RefCell::new(PermMemo::default()),
        }))
    }

    pub fn identity() -> Self {
        Self::new(PermKind::Identity, "identity".into())
    }

    /// Wraps an arbitrary map. Nothing is assumed about it; injectivity is
    /// checked as values are evaluated.
    pub fn from_fn(label: impl Into<String>, f: impl Fn(u64) -> u64 + 'static) -> Self {
        Self::new(PermKind::Custom(Rc::new(f)), label.into())
    }

    /// Human-readable identifier, matching [`PermSpec`] syntax where one exists.
    pub fn label(&self) -> &str {
        &self.0.label
    }

    /// Number of inputs evaluated so far.
    pub fn evaluated(&self) -> u64 {
        self.0.memo.borrow().forward.len() as u64
    }

    /// `π(n)` under the default budget.
    pub fn forward(&self, n: u64) -> Result<u64> {
        self.forward_with(n, &EvaluationBudget::default())
    }

    /// `π⁻¹(m)` under the default budget.
    pub fn inverse(&self, m: u64) -> Result<u64> {
        self.inverse_with(m, &EvaluationBudget::default())
    }

    pub fn forward_with(&self, n: u64, b: &EvaluationBudget) -> Result<u64> {
        if let PermKind::Identity = self.0.kind {
            b.check_value(n)?;
            return Ok(n);
        }
        b.check_value(n)?;
        self.ensure_forward(n + 1, b)?;
        Ok(self.0.memo.borrow().forward[n as usize])
    }

    pub fn inverse_with(&self, m: u64, b: &EvaluationBudget) -> Result<u64> {
        if let PermKind::Identity = self.0.kind {
            b.check_value(m)?;
            return Ok(m);
        }
        if m == SATURATED {
            return Err(SetError::Domain(
                "the saturated marker has no preimage".into(),
            ));
        }
        loop {
            let (found, scanned) = {
                let memo = self.0.memo.borrow();
                (memo.preimage(m), memo.forward.len() as u64)
            };
            if let Some(p) = found {
                return Ok(p);
            }
            self.scan_more(scanned, b)?;
        }
    }

    fn scan_more(&self, scanned: u64, b: &EvaluationBudget) -> Result<()> {
        let limit = b.len_limit();
        if scanned >= limit {
            return Err(SetError::value(scanned, b.max_value));
        }
        let target = scanned.saturating_mul(2).max(scanned + 64).min(limit);
        self.ensure_forward(target, b)
    }

    /// Scans until every value below `hi` has a known preimage.
    pub(crate) fn ensure_frontier(&self, hi: u64, b: &EvaluationBudget) -> Result<()> {
        if let PermKind::Identity = self.0.kind {
            return b.check_len(hi);
        }
        loop {
            let (frontier, scanned) = {
                let memo = self.0.memo.borrow();
                (memo.frontier, memo.forward.len() as u64)
            };
            if frontier >= hi {
                return Ok(());
            }
            self.scan_more(scanned, b)?;
        }
    }

    /// Preimage of a value already covered by [`ensure_frontier`](Self::ensure_frontier).
    pub(crate) fn inverse_known(&self, m: u64) -> u64 {
        if let PermKind::Identity = self.0.kind {
            return m;
        }
        self.0.memo.borrow().preimage(m).expect("frontier ensured")
    }

    fn ensure_forward(&self, hi: u64, b: &EvaluationBudget) -> Result<()> {
        b.check_len(hi)?;
        loop {
            let x = self.0.memo.borrow().forward.len() as u64;
            if x >= hi {
                return Ok(());
            }
            if let PermKind::BlockShuffle { width, seed } = self.0.kind {
                self.load_block(x / width, width, seed);
            }
            let v = self.compute(x, b)?;
            self.0.memo.borrow_mut().record(x, v)?;
        }
    }

    fn load_block(&self, block: u64, width: u64, seed: u64) {
        let mut memo = self.0.memo.borrow_mut();
        if matches!(memo.block, Some((k, _)) if k == block) {
            return;
        }
        let start = block * width;
        let mut values: Vec<u64> = (start..start + width).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(bits::draw(seed, block));
        values.shuffle(&mut rng);
        memo.block = Some((block, values));
    }

    fn compute(&self, x: u64, b: &EvaluationBudget) -> Result<u64> {
        match &self.0.kind {
            PermKind::Identity => Ok(x),
            PermKind::BlockShuffle { width, .. } => {
                let memo = self.0.memo.borrow();
                let (_, values) = memo.block.as_ref().expect("block loaded");
                Ok(values[(x % width) as usize])
            }
            PermKind::JoinHat(inner) => {
                let n = x / 2;
                if x % 2 == 1 {
                    Ok(FACTORIALS.get(n as usize).copied().unwrap_or(SATURATED))
                } else {
                    let j = inner.forward_with(n, b)?;
                    Ok(if j == SATURATED {
                        SATURATED
                    } else {
                        nonfactorial(j)
                    })
                }
            }
            PermKind::Patched(p) => {
                if p.domain.with_budget(*b).member(x)? && !p.patched.with_budget(*b).member(x)? {
                    match &p.map {
                        PatchMap::Index => p.domain.with_budget(*b).count(x),
                        PatchMap::IndexThen(pi) => {
                            pi.forward_with(p.domain.with_budget(*b).count(x)?, b)
                        }
                        PatchMap::Custom { f, .. } => Ok(f(x)),
                    }
                } else {
                    let position = self.0.memo.borrow().fills;
                    let v = p.fill.with_budget(*b).nth(position).map_err(|e| match e {
                        SetError::SetExhausted { .. } => SetError::FillExhausted { position },
                        other => other,
                    })?;
                    self.0.memo.borrow_mut().fills += 1;
                    Ok(v)
                }
            }
            PermKind::Composed(parts) => {
                let mut v = x;
                for p in parts {
                    if v == SATURATED {
                        break;
                    }
                    v = p.forward_with(v, b)?;
                }
                Ok(v)
            }
            PermKind::Custom(f) => Ok(f(x)),
        }
    }
}

/// `π̂` for a permutation `π`: odd inputs `2n+1` go to the `n`-th factorial
/// `f_n = (n+1)!` and even inputs `2n` go to the `π(n)`-th non-factorial.
pub fn join_hat(pi: &PermutationHandle) -> PermutationHandle {
    let label = if pi.label() == "identity" {
        "joinhat".to_string()
    } else {
        format!("joinhat[{}]", pi.label())
    };
    PermutationHandle::new(PermKind::JoinHat(pi.clone()), label)
}

/// A seeded uniform shuffle applied independently inside each block
/// `[kw, (k+1)w)`.
pub fn block_shuffle(width: u64, seed: u64) -> Result<PermutationHandle> {
    if width == 0 {
        return Err(SetError::Domain("block width must be at least 1".into()));
    }
    if width == 1 {
        return Ok(PermutationHandle::identity());
    }
    Ok(PermutationHandle::new(
        PermKind::BlockShuffle { width, seed },
        format!("blockshuffle:w={width},seed={seed}"),
    ))
}

/// `parts[last] ∘ … ∘ parts[0]`; the first entry is applied first.
pub fn compose(parts: &[PermutationHandle]) -> PermutationHandle {
    let label = format!(
        "compose[{}]",
        parts
            .iter()
            .map(|p| p.label().to_string())
            .collect::<Vec<_>>()
            .join(";")
    );
    PermutationHandle::new(PermKind::Composed(parts.to_vec()), label)
}

/// The patched bijection `π_f`.
///
/// `π_f(n) = f(n)` for `n ∈ C ∖ H`; every `n ∈ C̄ ∪ H`, taken in increasing
/// order, receives the least element of `f(H)` not used by an earlier input.
/// Since `f` is injective, that is simply the next element of `f(H)`.
pub fn patch_bijection(
    map: PatchMap,
    domain: &SetHandle,
    patched: &SetHandle,
) -> PermutationHandle {
    let fill = match &map {
        PatchMap::Index => sets::within(patched, domain),
        PatchMap::IndexThen(pi) => sets::apply(pi, &sets::within(patched, domain)),
        PatchMap::Custom {
            image_of_patched, ..
        } => image_of_patched.clone(),
    };
    PermutationHandle::new(
        PermKind::Patched(Patch {
            domain: domain.clone(),
            patched: patched.clone(),
            map,
            fill,
        }),
        "patched".into(),
    )
}

/// Outcome of [`verify_bijection_prefix`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BijectionReport {
    pub n: u64,
    /// Values below `n` with no preimage below `n`.
    pub deficit: Vec<u64>,
}

/// Checks injectivity on `[0, n)` and reports the surjectivity deficit.
/// Injectivity failures surface as [`SetError::InjectivityViolation`].
pub fn verify_bijection_prefix(
    pi: &PermutationHandle,
    n: u64,
    b: &EvaluationBudget,
) -> Result<BijectionReport> {
    if let PermKind::Identity = pi.0.kind {
        b.check_len(n)?;
        return Ok(BijectionReport {
            n,
            deficit: Vec::new(),
        });
    }
    pi.ensure_forward(n, b)?;
    let memo = pi.0.memo.borrow();
    let deficit = (0..n)
        .filter(|&v| !matches!(memo.preimage(v), Some(p) if p < n))
        .collect();
    Ok(BijectionReport { n, deficit })
}

/// The sparse subset `H ⊆ C` for a finite family of injections.
///
/// `h_0 = c_0`, and `h_{n+1}` is the least `c ∈ C` with `c > h_n` and
/// `f_i(c) ≥ h_n!` for every `i`. Construction stops after `k` elements or
/// at the first evaluation error, whichever comes first; the elements found
/// are returned together with the error, if any.
pub fn sparse_prefix(
    domain: &SetHandle,
    fs: &[PermutationHandle],
    k: usize,
) -> (Vec<u64>, Option<SetError>) {
    let b = domain.budget();
    let mut h = Vec::with_capacity(k);
    if k == 0 {
        return (h, None);
    }
    let first = match domain.nth(0) {
        Ok(c) => c,
        Err(e) => return (h, Some(e)),
    };
    h.push(first);
    let mut idx = 1u64;
    while h.len() < k {
        let last = *h.last().expect("non-empty");
        let threshold = factorial_big(last);
        loop {
            let c = match domain.nth(idx) {
                Ok(c) => c,
                Err(e) => return (h, Some(e)),
            };
            idx += 1;
            let mut ok = true;
            for f in fs {
                let v = match f.forward_with(c, &b) {
                    Ok(v) => v,
                    Err(e) => return (h, Some(e)),
                };
                if v == SATURATED {
                    if threshold > BigUint::from(u64::MAX) {
                        return (h, Some(SetError::value(u64::MAX, b.max_value)));
                    }
                } else if BigUint::from(v) < threshold {
                    ok = false;
                    break;
                }
            }
            if ok {
                h.push(c);
                break;
            }
        }
    }
    (h, None)
}

/// [`sparse_prefix`] as a finite set, failing with [`SetError::Halted`] if
/// fewer than `k` elements could be built within the budget.
pub fn sparse_subset(domain: &SetHandle, fs: &[PermutationHandle], k: usize) -> Result<SetHandle> {
    let (h, err) = sparse_prefix(domain, fs, k);
    match err {
        Some(cause) => Err(SetError::Halted {
            reached: h.len(),
            cause: Box::new(cause),
        }),
        None => Ok(sets::finite(h).with_budget(domain.budget())),
    }
}

fn factorial_big(n: u64) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, i| acc * i)
}

/// Textual permutation descriptions used by the CLI and expression language.
///
/// ```text
/// identity
/// joinhat                       (join_hat of the identity)
/// joinhat[<spec>]
/// blockshuffle:w=<width>,seed=<seed>
/// compose[<spec>;<spec>;…]      (first entry applied first)
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PermSpec {
    Identity,
    JoinHat(Box<PermSpec>),
    BlockShuffle { width: u64, seed: u64 },
    Compose(Vec<PermSpec>),
}

impl PermSpec {
    pub fn build(&self) -> Result<PermutationHandle> {
        match self {
            PermSpec::Identity => Ok(PermutationHandle::identity()),
            PermSpec::JoinHat(inner) => Ok(join_hat(&inner.build()?)),
            PermSpec::BlockShuffle { width, seed } => block_shuffle(*width, *seed),
            PermSpec::Compose(parts) => {
                let built = parts
                    .iter()
                    .map(PermSpec::build)
                    .collect::<Result<Vec<_>>>()?;
                Ok(compose(&built))
            }
        }
    }

    /// 16 block shuffles (widths 2, 16, 256, 4096 × seeds 1..=4), the join
    /// permutation of the identity, and the identity.
    pub fn default_family() -> Vec<PermSpec> {
        let mut family = Vec::new();
        for width in [2, 16, 256, 4096] {
            for seed in 1..=4 {
                family.push(PermSpec::BlockShuffle { width, seed });
            }
        }
        family.push(PermSpec::JoinHat(Box::new(PermSpec::Identity)));
        family.push(PermSpec::Identity);
        family
    }

    /// Parses `default` or a `|`-separated list of specs.
    pub fn parse_family(s: &str) -> std::result::Result<Vec<PermSpec>, String> {
        if s.trim() == "default" {
            return Ok(Self::default_family());
        }
        s.split('|').map(|p| p.trim().parse()).collect()
    }
}

impl fmt::Display for PermSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PermSpec::Identity => f.write_str("identity"),
            PermSpec::JoinHat(inner) if **inner == PermSpec::Identity => f.write_str("joinhat"),
            PermSpec::JoinHat(inner) => write!(f, "joinhat[{inner}]"),
            PermSpec::BlockShuffle { width, seed } => {
                write!(f, "blockshuffle:w={width},seed={seed}")
            }
            PermSpec::Compose(parts) => {
                f.write_str("compose[")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Splits on `;` at bracket depth zero.
fn split_top(s: &str) -> std::result::Result<Vec<&str>, String> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(format!("unbalanced `]` in `{s}`"));
                }
            }
            ';' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(format!("unbalanced `[` in `{s}`"));
    }
    parts.push(&s[start..]);
    Ok(parts)
}

impl FromStr for PermSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s == "identity" {
            return Ok(PermSpec::Identity);
        }
        if s == "joinhat" {
            return Ok(PermSpec::JoinHat(Box::new(PermSpec::Identity)));
        }
        if let Some(inner) = s.strip_prefix("joinhat[").and_then(|r| r.strip_suffix(']')) {
            return Ok(PermSpec::JoinHat(Box::new(inner.parse()?)));
        }
        if let Some(inner) = s.strip_prefix("compose[").and_then(|r| r.strip_suffix(']')) {
            let parts = split_top(inner)?
                .into_iter()
                .map(str::parse)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if parts.is_empty() {
                return Err("compose needs at least one permutation".into());
            }
            return Ok(PermSpec::Compose(parts));
        }
        if let Some(rest) = s.strip_prefix("blockshuffle:") {
            let (mut width, mut seed) = (None, None);
            for kv in rest.split(',') {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| format!("expected key=value in `{kv}`"))?;
                let v: u64 = v.parse().map_err(|_| format!("invalid number `{v}`"))?;
                match k {
                    "w" => width = Some(v),
                    "seed" => seed = Some(v),
                    other => return Err(format!("unknown blockshuffle key `{other}`")),
                }
            }
            let width = width.ok_or("blockshuffle needs w=<width>")?;
            if width == 0 {
                return Err("block width must be at least 1".into());
            }
            return Ok(PermSpec::BlockShuffle {
                width,
                seed: seed.unwrap_or(0),
            });
        }
        Err(format!("unknown permutation `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{arithmetic, evens, omega};

    fn budget() -> EvaluationBudget {
        EvaluationBudget::default()
    }

    #[test]
    fn nonfactorials_match_brute_force() {
        let brute: Vec<u64> = (0..5000u64).filter(|n| !FACTORIALS.contains(n)).collect();
        for (j, &g) in brute.iter().enumerate() {
            assert_eq!(nonfactorial(j as u64), g, "j = {j}");
        }
    }

    #[test]
    fn join_hat_of_identity() {
        let p = join_hat(&PermutationHandle::identity());
        let odd: Vec<u64> = [1, 3, 5, 7]
            .iter()
            .map(|&n| p.forward(n).unwrap())
            .collect();
        assert_eq!(odd, vec![1, 2, 6, 24]);
        let even: Vec<u64> = [0, 2, 4, 6]
            .iter()
            .map(|&n| p.forward(n).unwrap())
            .collect();
        assert_eq!(even, vec![0, 3, 4, 5]);
        assert_eq!(p.forward(41).unwrap(), SATURATED);
        assert_eq!(p.inverse(24).unwrap(), 7);
        assert_eq!(p.inverse(7).unwrap(), 8);
    }

    #[test]
    fn join_hat_odds_ignore_inner() {
        let a = join_hat(&PermutationHandle::identity());
        let c = join_hat(&block_shuffle(16, 3).unwrap());
        for n in 0..30 {
            assert_eq!(a.forward(2 * n + 1).unwrap(), c.forward(2 * n + 1).unwrap());
        }
    }

    #[test]
    fn verify_examples() {
        let id = PermutationHandle::identity();
        assert!(verify_bijection_prefix(&id, 1000, &budget())
            .unwrap()
            .deficit
            .is_empty());

        let jh = join_hat(&id);
        let report = verify_bijection_prefix(&jh, 10, &budget()).unwrap();
        // images of 0..10: 0,1,3,2,4,6,5,24,7,120
        assert_eq!(report.deficit, vec![8, 9]);

        let broken = PermutationHandle::from_fn("halve", |n| n / 2 * 2);
        assert_eq!(
            verify_bijection_prefix(&broken, 10, &budget()),
            Err(SetError::InjectivityViolation {
                first: 0,
                second: 1,
                value: 0
            })
        );
    }

    #[test]
    fn block_shuffles() {
        assert_eq!(block_shuffle(1, 9).unwrap().label(), "identity");
        assert!(block_shuffle(0, 1).is_err());
        let p = block_shuffle(16, 7).unwrap();
        let r = verify_bijection_prefix(&p, 10_000, &budget()).unwrap();
        assert!(r.deficit.is_empty());
        for n in 0..160 {
            assert_eq!(p.forward(n).unwrap() / 16, n / 16);
        }
        let q = block_shuffle(16, 7).unwrap();
        for n in 0..160 {
            assert_eq!(p.forward(n).unwrap(), q.forward(n).unwrap());
        }
    }

    #[test]
    fn patch_example_trace() {
        let pf = patch_bijection(PatchMap::Index, &evens(), &arithmetic(0, 4).unwrap());
        let v: Vec<u64> = (0..8).map(|n| pf.forward(n).unwrap()).collect();
        assert_eq!(v, vec![0, 2, 1, 4, 6, 8, 3, 10]);
        assert!(verify_bijection_prefix(&pf, 2000, &budget()).is_ok());
    }

    #[test]
    fn patch_identity_fill() {
        let pf = patch_bijection(PatchMap::Index, &omega(), &omega());
        for n in 0..200 {
            assert_eq!(pf.forward(n).unwrap(), n);
        }
    }

    #[test]
    fn patch_fill_exhausts_for_finite_h() {
        let pf = patch_bijection(PatchMap::Index, &evens(), &sets::finite([0]));
        assert_eq!(pf.forward(0).unwrap(), 0);
        assert_eq!(pf.forward(1), Err(SetError::FillExhausted { position: 1 }));
    }

    #[test]
    fn compose_order() {
        let jh = PermSpec::JoinHat(Box::new(PermSpec::Identity));
        let spec = PermSpec::Compose(vec![PermSpec::BlockShuffle { width: 2, seed: 0 }, jh]);
        let p = spec.build().unwrap();
        let s = block_shuffle(2, 0).unwrap();
        let j = join_hat(&PermutationHandle::identity());
        for n in 0..20 {
            assert_eq!(
                p.forward(n).unwrap(),
                j.forward(s.forward(n).unwrap()).unwrap()
            );
        }
    }

    #[test]
    fn sparse_examples() {
        let small = EvaluationBudget::new(100_000, 100_000);
        let id = PermutationHandle::identity();
        let (h, err) = sparse_prefix(&omega().with_budget(small), std::slice::from_ref(&id), 10);
        assert_eq!(h, vec![0, 1, 2, 3, 6, 720]);
        assert!(err.unwrap().is_budget());
        let h = sparse_subset(&evens().with_budget(small), std::slice::from_ref(&id), 4).unwrap();
        assert_eq!(h.prefix(100).unwrap(), vec![0, 2, 4, 24]);
        let halted = sparse_subset(&omega().with_budget(small), &[id], 7).unwrap_err();
        assert!(matches!(halted, SetError::Halted { reached: 6, .. }));
        assert!(halted.is_budget());
    }

    #[test]
    fn sparse_thresholds_hold() {
        let small = EvaluationBudget::new(50_000, 50_000);
        let fs = vec![
            PermutationHandle::identity(),
            block_shuffle(16, 2).unwrap(),
            join_hat(&PermutationHandle::identity()),
        ];
        let (h, _) = sparse_prefix(&omega().with_budget(small), &fs, 8);
        assert!(h.len() >= 4);
        for w in h.windows(2) {
            assert!(w[1] > w[0]);
            let t = factorial_big(w[0]);
            for f in &fs {
                let v = f.forward(w[1]).unwrap();
                assert!(v == SATURATED || BigUint::from(v) >= t);
            }
        }
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in [
            "identity",
            "joinhat",
            "joinhat[blockshuffle:w=4,seed=2]",
            "blockshuffle:w=256,seed=7",
            "compose[joinhat;blockshuffle:w=2,seed=1;compose[identity]]",
        ] {
            let spec: PermSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert_eq!(
            "joinhat[identity]".parse::<PermSpec>().unwrap().to_string(),
            "joinhat"
        );
        assert!("blockshuffle:w=0".parse::<PermSpec>().is_err());
        assert!("compose[identity".parse::<PermSpec>().is_err());
        assert!("rotate".parse::<PermSpec>().is_err());
        assert_eq!(PermSpec::default_family().len(), 18);
    }

    #[test]
    fn labels_match_specs() {
        for spec in PermSpec::default_family() {
            assert_eq!(spec.build().unwrap().label(), spec.to_string());
        }
    }
}
