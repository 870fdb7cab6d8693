//! Lazily evaluated subsets of ω.
//!
//! A [`SetHandle`] is a node in an expression DAG plus an evaluation budget.
//! Closed-form primitives answer queries directly. Every other node keeps an
//! append-only memo of the decided prefix `[0, len)`: a membership bitmap and
//! the sorted list of members found so far. Both views are derived from the
//! same memo, so `member`, `nth`, `count` and `prefix` always agree.
//!
//! Enumeration is 0-indexed: `nth(A, 0)` is the least element of `A`.

use std::cell::{OnceCell, RefCell};
use std::fmt;
use std::rc::Rc;

use crate::bits;
use crate::budget::EvaluationBudget;
use crate::constructions::{PartitionFamily, RealSpec};
use crate::error::{Result, SetError};
use crate::permutations::PermutationHandle;

/// Distinct factorials `1!, 2!, …, 20!`; `21!` does not fit in a `u64`.
pub(crate) const FACTORIALS: [u64; 20] = {
    let mut t = [0u64; 20];
    let mut acc = 1u64;
    let mut i = 0;
    while i < 20 {
        acc *= (i + 1) as u64;
        t[i] = acc;
        i += 1;
    }
    t
};

/// Number of distinct factorials `≤ n`.
pub(crate) fn factorials_at_most(n: u64) -> u64 {
    FACTORIALS.partition_point(|&f| f <= n) as u64
}

/// The pairing `⟨i, n⟩ = 2^i (2n + 1) − 1`, or `None` on overflow.
pub fn pair(i: u32, n: u64) -> Option<u64> {
    let odd = n.checked_mul(2)?.checked_add(1)?;
    let shifted = odd.checked_shl(i)?;
    if shifted >> i != odd {
        return None;
    }
    Some(shifted - 1)
}

/// Inverse of [`pair`].
pub fn unpair(m: u64) -> (u32, u64) {
    let v = m as u128 + 1;
    let i = v.trailing_zeros();
    (i, ((v >> i) as u64 - 1) / 2)
}

#[derive(Debug, Default)]
struct Memo {
    len: u64,
    words: Vec<u64>,
    elems: Vec<u64>,
}

impl Memo {
    #[inline]
    fn member(&self, n: u64) -> bool {
        debug_assert!(n < self.len);
        (self.words[(n / 64) as usize] >> (n % 64)) & 1 == 1
    }

    #[inline]
    fn count_below(&self, n: u64) -> u64 {
        self.elems.partition_point(|&x| x < n) as u64
    }

    fn extend(&mut self, hi: u64, members: Vec<u64>) {
        debug_assert!(hi >= self.len);
        self.words.resize(hi.div_ceil(64) as usize, 0);
        for m in members {
            debug_assert!(m >= self.len && m < hi);
            self.words[(m / 64) as usize] |= 1 << (m % 64);
            self.elems.push(m);
        }
        self.len = hi;
    }
}

pub(crate) enum Kind {
    Omega,
    Empty,
    Evens,
    Odds,
    Factorials,
    Arith {
        a: u64,
        m: u64,
    },
    Finite(Vec<u64>),
    Bernoulli {
        threshold: u64,
        seed: u64,
    },
    Expansion(RealSpec),
    Compl(Rc<Node>),
    Union(Rc<Node>, Rc<Node>),
    Inter(Rc<Node>, Rc<Node>),
    Diff(Rc<Node>, Rc<Node>),
    Join(Rc<Node>, Rc<Node>),
    Into {
        b: Rc<Node>,
        a: Rc<Node>,
    },
    Within {
        b: Rc<Node>,
        a: Rc<Node>,
    },
    Column {
        x: Rc<Node>,
        i: u32,
    },
    Apply {
        perm: PermutationHandle,
        set: Rc<Node>,
    },
    Xr {
        real: RealSpec,
        family: PartitionFamily,
    },
}

impl Kind {
    fn is_closed(&self) -> bool {
        matches!(
            self,
            Kind::Omega
                | Kind::Empty
                | Kind::Evens
                | Kind::Odds
                | Kind::Factorials
                | Kind::Arith { .. }
                | Kind::Finite(_)
        )
    }

    fn name(&self) -> &'static str {
        match self {
            Kind::Omega => "omega",
            Kind::Empty => "empty",
            Kind::Evens => "evens",
            Kind::Odds => "odds",
            Kind::Factorials => "factorials",
            Kind::Arith { .. } => "arith",
            Kind::Finite(_) => "finite",
            Kind::Bernoulli { .. } => "bern",
            Kind::Expansion(_) => "expansion",
            Kind::Compl(_) => "compl",
            Kind::Union(..) => "union",
            Kind::Inter(..) => "inter",
            Kind::Diff(..) => "diff",
            Kind::Join(..) => "join",
            Kind::Into { .. } => "into",
            Kind::Within { .. } => "within",
            Kind::Column { .. } => "col",
            Kind::Apply { .. } => "perm",
            Kind::Xr { .. } => "xr",
        }
    }
}

pub(crate) struct Node {
    kind: Kind,
    memo: RefCell<Memo>,
    bound: OnceCell<Option<u64>>,
}

impl Node {
    fn new(kind: Kind) -> Rc<Node> {
        Rc::new(Node {
            kind,
            memo: RefCell::new(Memo::default()),
            bound: OnceCell::new(),
        })
    }

    fn closed_member(&self, n: u64) -> bool {
        match &self.kind {
            Kind::Omega => true,
            Kind::Empty => false,
            Kind::Evens => n.is_multiple_of(2),
            Kind::Odds => n % 2 == 1,
            Kind::Factorials => FACTORIALS.binary_search(&n).is_ok(),
            Kind::Arith { a, m } => n >= *a && (n - a).is_multiple_of(*m),
            Kind::Finite(v) => v.binary_search(&n).is_ok(),
            _ => unreachable!("not a closed-form set"),
        }
    }

    fn closed_count(&self, n: u64) -> u64 {
        match &self.kind {
            Kind::Omega => n,
            Kind::Empty => 0,
            Kind::Evens => n.div_ceil(2),
            Kind::Odds => n / 2,
            Kind::Factorials => FACTORIALS.partition_point(|&f| f < n) as u64,
            Kind::Arith { a, m } => {
                if n <= *a {
                    0
                } else {
                    (n - a - 1) / m + 1
                }
            }
            Kind::Finite(v) => v.partition_point(|&x| x < n) as u64,
            _ => unreachable!("not a closed-form set"),
        }
    }

    /// `None` when the element does not exist or does not fit in a `u64`.
    fn closed_nth(&self, k: u64) -> Option<u64> {
        match &self.kind {
            Kind::Omega => Some(k),
            Kind::Empty => None,
            Kind::Evens => k.checked_mul(2),
            Kind::Odds => k.checked_mul(2)?.checked_add(1),
            Kind::Factorials => FACTORIALS.get(k as usize).copied(),
            Kind::Arith { a, m } => k.checked_mul(*m)?.checked_add(*a),
            Kind::Finite(v) => v.get(k as usize).copied(),
            _ => unreachable!("not a closed-form set"),
        }
    }

    /// Decides membership on `[0, hi)`.
    pub(crate) fn ensure(&self, hi: u64, b: &EvaluationBudget) -> Result<()> {
        if hi == 0 {
            return Ok(());
        }
        b.check_len(hi)?;
        if self.kind.is_closed() {
            return Ok(());
        }
        let lo = self.memo.borrow().len;
        if hi <= lo {
            return Ok(());
        }
        let members = self.decide(lo, hi, b)?;
        self.memo.borrow_mut().extend(hi, members);
        Ok(())
    }

    /// Like [`ensure`](Self::ensure) but grows the memo geometrically so that
    /// ascending point queries stay linear overall.
    fn ensure_rounded(&self, hi: u64, b: &EvaluationBudget) -> Result<()> {
        if self.kind.is_closed() {
            return self.ensure(hi, b);
        }
        let len = self.memo.borrow().len;
        if hi <= len {
            return Ok(());
        }
        let target = hi.max(len.saturating_mul(2).min(b.len_limit()));
        if target > hi {
            match self.ensure(target, b) {
                Err(e) if e.is_budget() => {}
                other => return other,
            }
        }
        self.ensure(hi, b)
    }

    #[inline]
    pub(crate) fn member_at(&self, n: u64) -> bool {
        if self.kind.is_closed() {
            self.closed_member(n)
        } else {
            self.memo.borrow().member(n)
        }
    }

    #[inline]
    pub(crate) fn count_below(&self, n: u64) -> u64 {
        if self.kind.is_closed() {
            self.closed_count(n)
        } else {
            self.memo.borrow().count_below(n)
        }
    }

    #[inline]
    pub(crate) fn nth_at(&self, j: u64) -> u64 {
        if self.kind.is_closed() {
            self.closed_nth(j).expect("index checked by ensure_len")
        } else {
            self.memo.borrow().elems[j as usize]
        }
    }

    /// Makes the first `k` elements available, returning how many exist.
    /// A return value below `k` means the set is known to be finite with
    /// exactly that many elements.
    pub(crate) fn ensure_len(&self, k: u64, b: &EvaluationBudget) -> Result<u64> {
        if k == 0 {
            return Ok(0);
        }
        b.check_index(k - 1)?;
        if self.kind.is_closed() {
            return match &self.kind {
                Kind::Empty => Ok(0),
                Kind::Finite(v) => {
                    let have = k.min(v.len() as u64);
                    if have > 0 {
                        b.check_value(v[have as usize - 1])?;
                    }
                    Ok(have)
                }
                _ => {
                    let v = self
                        .closed_nth(k - 1)
                        .ok_or_else(|| SetError::value(u64::MAX, b.max_value))?;
                    b.check_value(v)?;
                    Ok(k)
                }
            };
        }
        loop {
            let (len, have) = {
                let m = self.memo.borrow();
                (m.len, m.elems.len() as u64)
            };
            if have >= k {
                return Ok(k);
            }
            let bound = self.finite_bound(b);
            if let Some(bd) = bound {
                if len >= bd {
                    return Ok(have);
                }
            }
            let limit = b.len_limit();
            if len >= limit {
                return Err(SetError::value(len, b.max_value));
            }
            let mut target = len.saturating_mul(2).max(len + 64).min(limit);
            if let Some(bd) = bound {
                target = target.min(bd);
            }
            loop {
                match self.ensure(target, b) {
                    Ok(()) => break,
                    Err(e) if e.is_budget() && target > len + 1 => {
                        target = len + (target - len) / 2;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }

    /// An exclusive upper bound on the elements, when the set is recognisably
    /// finite. `None` means "not known to be finite".
    pub(crate) fn finite_bound(&self, b: &EvaluationBudget) -> Option<u64> {
        if let Some(v) = self.bound.get() {
            return *v;
        }
        let v = self.compute_bound(b);
        let _ = self.bound.set(v);
        v
    }

    fn compute_bound(&self, b: &EvaluationBudget) -> Option<u64> {
        match &self.kind {
            Kind::Empty => Some(0),
            Kind::Finite(v) => Some(v.last().map_or(0, |x| x + 1)),
            Kind::Expansion(r) => r.finite_bound(),
            Kind::Compl(a) => matches!(a.kind, Kind::Omega).then_some(0),
            Kind::Union(x, y) => Some(x.finite_bound(b)?.max(y.finite_bound(b)?)),
            Kind::Inter(x, y) => match (x.finite_bound(b), y.finite_bound(b)) {
                (Some(p), Some(q)) => Some(p.min(q)),
                (p, q) => p.or(q),
            },
            Kind::Diff(x, _) => x.finite_bound(b),
            Kind::Join(x, y) => {
                let p = x.finite_bound(b)?.checked_mul(2)?;
                let q = y.finite_bound(b)?.checked_mul(2)?;
                Some(p.saturating_sub(1).max(q))
            }
            Kind::Into { b: idx, a } => {
                if let Some(bd) = a.finite_bound(b) {
                    return Some(bd);
                }
                let nb = idx.finite_bound(b)?;
                if nb == 0 {
                    return Some(0);
                }
                let avail = a.ensure_len(nb, b).ok()?;
                if avail == 0 {
                    return Some(0);
                }
                a.nth_at(avail - 1).checked_add(1)
            }
            Kind::Within { b: target, a } => {
                let from_target = target.finite_bound(b).and_then(|t| {
                    a.ensure(t, b).ok()?;
                    Some(a.count_below(t))
                });
                let from_base = a.finite_bound(b).and_then(|t| {
                    a.ensure(t, b).ok()?;
                    Some(a.count_below(t))
                });
                match (from_target, from_base) {
                    (Some(p), Some(q)) => Some(p.min(q)),
                    (p, q) => p.or(q),
                }
            }
            Kind::Column { x, i } => {
                let t = x.finite_bound(b)? >> i;
                Some(t.div_ceil(2))
            }
            Kind::Apply { perm, set } => {
                let bd = set.finite_bound(b)?;
                set.ensure(bd, b).ok()?;
                let mut top = 0u64;
                for j in 0..set.count_below(bd) {
                    let v = perm.forward_with(set.nth_at(j), b).ok()?;
                    if v == crate::permutations::SATURATED {
                        return None;
                    }
                    top = top.max(v + 1);
                }
                Some(top)
            }
            _ => None,
        }
    }

    /// Members in `[lo, hi)`, given that `[0, lo)` is already decided.
    fn decide(&self, lo: u64, hi: u64, b: &EvaluationBudget) -> Result<Vec<u64>> {
        let mut out = Vec::new();
        match &self.kind {
            Kind::Bernoulli { threshold, seed } => {
                out.extend((lo..hi).filter(|&n| bits::draw(*seed, n) < *threshold));
            }
            Kind::Expansion(r) => {
                for n in lo..hi {
                    if r.bit(n) {
                        out.push(n);
                    }
                }
            }
            Kind::Compl(a) => {
                a.ensure(hi, b)?;
                out.extend((lo..hi).filter(|&n| !a.member_at(n)));
            }
            Kind::Union(x, y) => {
                x.ensure(hi, b)?;
                y.ensure(hi, b)?;
                out.extend((lo..hi).filter(|&n| x.member_at(n) || y.member_at(n)));
            }
            Kind::Inter(x, y) => {
                x.ensure(hi, b)?;
                y.ensure(hi, b)?;
                out.extend((lo..hi).filter(|&n| x.member_at(n) && y.member_at(n)));
            }
            Kind::Diff(x, y) => {
                x.ensure(hi, b)?;
                y.ensure(hi, b)?;
                out.extend((lo..hi).filter(|&n| x.member_at(n) && !y.member_at(n)));
            }
            Kind::Join(x, y) => {
                x.ensure(hi.div_ceil(2), b)?;
                y.ensure(hi / 2, b)?;
                out.extend((lo..hi).filter(|&n| {
                    if n % 2 == 0 {
                        x.member_at(n / 2)
                    } else {
                        y.member_at(n / 2)
                    }
                }));
            }
            Kind::Into { b: idx, a } => {
                a.ensure(hi, b)?;
                let (j0, j1) = (a.count_below(lo), a.count_below(hi));
                idx.ensure(j1, b)?;
                out.extend((j0..j1).filter(|&j| idx.member_at(j)).map(|j| a.nth_at(j)));
            }
            Kind::Within { b: target, a } => {
                let avail = a.ensure_len(hi, b)?;
                if avail > lo {
                    let top = a.nth_at(avail - 1);
                    target.ensure(top + 1, b)?;
                    out.extend((lo..avail).filter(|&k| target.member_at(a.nth_at(k))));
                }
            }
            Kind::Column { x, i } => {
                let top = pair(*i, hi - 1).ok_or_else(|| SetError::value(u64::MAX, b.max_value))?;
                x.ensure(
                    top.checked_add(1)
                        .ok_or_else(|| SetError::value(u64::MAX, b.max_value))?,
                    b,
                )?;
                out.extend((lo..hi).filter(|&n| x.member_at(pair(*i, n).expect("checked above"))));
            }
            Kind::Apply { perm, set } => {
                perm.ensure_frontier(hi, b)?;
                let pre: Vec<u64> = (lo..hi).map(|m| perm.inverse_known(m)).collect();
                let top = pre.iter().copied().max().expect("non-empty range");
                set.ensure(top + 1, b)?;
                out.extend(
                    pre.iter()
                        .zip(lo..hi)
                        .filter(|(&p, _)| set.member_at(p))
                        .map(|(_, m)| m),
                );
            }
            Kind::Xr { real, family } => {
                out = crate::constructions::decide_xr(real, family, lo, hi, b)?;
            }
            _ => unreachable!("closed-form sets have no memo"),
        }
        Ok(out)
    }
}

/// A lazily evaluated, memoizing subset of ω.
///
/// Cloning is cheap and shares the memo. Combinators inherit the budget of
/// their first set argument; [`with_budget`](Self::with_budget) overrides it.
#[derive(Clone)]
pub struct SetHandle {
    node: Rc<Node>,
    budget: EvaluationBudget,
}

impl fmt::Debug for SetHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let decided = if self.node.kind.is_closed() {
            None
        } else {
            Some(self.node.memo.borrow().len)
        };
        f.debug_struct("SetHandle")
            .field("kind", &self.node.kind.name())
            .field("decided", &decided)
            .field("budget", &self.budget)
            .finish()
    }
}

impl SetHandle {
    pub(crate) fn from_kind(kind: Kind, budget: EvaluationBudget) -> Self {
        SetHandle {
            node: Node::new(kind),
            budget,
        }
    }

    pub fn budget(&self) -> EvaluationBudget {
        self.budget
    }

    /// The same set (sharing its memo) evaluated under a different budget.
    pub fn with_budget(&self, budget: EvaluationBudget) -> SetHandle {
        SetHandle {
            node: Rc::clone(&self.node),
            budget,
        }
    }

    /// Short name of the outermost constructor, e.g. `"into"`.
    pub fn kind_name(&self) -> &'static str {
        self.node.kind.name()
    }

    /// True if both handles share the same underlying node.
    pub fn same_node(&self, other: &SetHandle) -> bool {
        Rc::ptr_eq(&self.node, &other.node)
    }

    pub fn member(&self, n: u64) -> Result<bool> {
        self.budget.check_value(n)?;
        self.node.ensure_rounded(n + 1, &self.budget)?;
        Ok(self.node.member_at(n))
    }

    /// The `k`-th element in increasing order (0-indexed).
    pub fn nth(&self, k: u64) -> Result<u64> {
        let avail = self.node.ensure_len(k.saturating_add(1), &self.budget)?;
        if avail <= k {
            return Err(SetError::SetExhausted {
                index: k,
                len: avail,
            });
        }
        Ok(self.node.nth_at(k))
    }

    /// `|A ∩ [0, n)|`.
    pub fn count(&self, n: u64) -> Result<u64> {
        self.node.ensure(n, &self.budget)?;
        Ok(self.node.count_below(n))
    }

    /// The sorted members below `n`.
    pub fn prefix(&self, n: u64) -> Result<Vec<u64>> {
        self.elements_between(0, n)
    }

    /// The sorted members of `[lo, hi)`.
    pub fn elements_between(&self, lo: u64, hi: u64) -> Result<Vec<u64>> {
        if hi <= lo {
            return Ok(Vec::new());
        }
        self.node.ensure(hi, &self.budget)?;
        let node = &self.node;
        if node.kind.is_closed() {
            let (j0, j1) = (node.closed_count(lo), node.closed_count(hi));
            Ok((j0..j1).map(|j| node.nth_at(j)).collect())
        } else {
            let memo = node.memo.borrow();
            let (j0, j1) = (memo.count_below(lo) as usize, memo.count_below(hi) as usize);
            Ok(memo.elems[j0..j1].to_vec())
        }
    }

    /// Membership of every `n < len` as a vector of booleans.
    pub fn indicator(&self, len: u64) -> Result<Vec<bool>> {
        self.node.ensure(len, &self.budget)?;
        Ok((0..len).map(|n| self.node.member_at(n)).collect())
    }

    /// Exclusive upper bound on the elements if the set is recognisably
    /// finite (e.g. built from finite primitives).
    pub fn finite_bound(&self) -> Option<u64> {
        self.node.finite_bound(&self.budget)
    }
}

fn prim(kind: Kind) -> SetHandle {
    SetHandle::from_kind(kind, EvaluationBudget::default())
}

pub fn omega() -> SetHandle {
    prim(Kind::Omega)
}

pub fn empty() -> SetHandle {
    prim(Kind::Empty)
}

pub fn evens() -> SetHandle {
    prim(Kind::Evens)
}

pub fn odds() -> SetHandle {
    prim(Kind::Odds)
}

/// `{n! : n ∈ ω} = {1, 2, 6, 24, …}`; values past `20!` exceed every budget.
pub fn factorials() -> SetHandle {
    prim(Kind::Factorials)
}

/// `{a + km : k ∈ ω}` with `a < m`.
pub fn arithmetic(a: u64, m: u64) -> Result<SetHandle> {
    if m == 0 {
        return Err(SetError::Domain("arith modulus must be at least 1".into()));
    }
    if a >= m {
        return Err(SetError::Domain(format!(
            "arith offset {a} must be below the modulus {m}"
        )));
    }
    Ok(prim(Kind::Arith { a, m }))
}

/// An explicit finite set.
pub fn finite<I: IntoIterator<Item = u64>>(elems: I) -> SetHandle {
    let mut v: Vec<u64> = elems.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    prim(Kind::Finite(v))
}

/// `{n : draw(seed, n) < threshold}`, the Bernoulli set with parameter
/// `threshold / 2^64`.
pub(crate) fn bernoulli_threshold(threshold: u64, seed: u64) -> SetHandle {
    prim(Kind::Bernoulli { threshold, seed })
}

fn unary(a: &SetHandle, f: impl FnOnce(Rc<Node>) -> Kind) -> SetHandle {
    SetHandle::from_kind(f(Rc::clone(&a.node)), a.budget)
}

fn binary(a: &SetHandle, b: &SetHandle, f: impl FnOnce(Rc<Node>, Rc<Node>) -> Kind) -> SetHandle {
    SetHandle::from_kind(f(Rc::clone(&a.node), Rc::clone(&b.node)), a.budget)
}

/// `B ▷ A = {a_{b_0} < a_{b_1} < …}`, the `B`-th elements of `A`.
pub fn into(b: &SetHandle, a: &SetHandle) -> SetHandle {
    binary(b, a, |b, a| Kind::Into { b, a })
}

/// `B ◁ A = {n : a_n ∈ B}`.
pub fn within(b: &SetHandle, a: &SetHandle) -> SetHandle {
    binary(b, a, |b, a| Kind::Within { b, a })
}

/// `A ⊕ B = {2a : a ∈ A} ∪ {2b + 1 : b ∈ B}`.
pub fn join(a: &SetHandle, b: &SetHandle) -> SetHandle {
    binary(a, b, Kind::Join)
}

pub fn compl(a: &SetHandle) -> SetHandle {
    unary(a, Kind::Compl)
}

pub fn union(a: &SetHandle, b: &SetHandle) -> SetHandle {
    binary(a, b, Kind::Union)
}

pub fn intersect(a: &SetHandle, b: &SetHandle) -> SetHandle {
    binary(a, b, Kind::Inter)
}

pub fn diff(a: &SetHandle, b: &SetHandle) -> SetHandle {
    binary(a, b, Kind::Diff)
}

/// `X^[i] = {n : ⟨i, n⟩ ∈ X}` under [`pair`].
pub fn column(x: &SetHandle, i: u32) -> SetHandle {
    unary(x, |x| Kind::Column { x, i })
}

/// `π(A)`: `m ∈ π(A)` iff `π⁻¹(m) ∈ A`.
pub fn apply(perm: &PermutationHandle, a: &SetHandle) -> SetHandle {
    unary(a, |set| Kind::Apply {
        perm: perm.clone(),
        set,
    })
}
