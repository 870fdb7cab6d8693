//! Exact identity suites, checked on seeded Bernoulli(1/2) sets at a prefix.
//!
//! Every law compares two sets on `[0, N)` (or checks an inequality at every
//! `n ≤ N`). A violation carries the least witness: the smallest element of
//! the symmetric difference, or the first `n` at which an inequality fails.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bits::child_seed;
use crate::budget::EvaluationBudget;
use crate::constructions::{
    bernoulli_ratio, build_partition, build_xr, truncated_xr, ColumnSource, RealSpec,
};
use crate::error::Result;
use crate::par;
use crate::permutations::{
    block_shuffle, join_hat, patch_bijection, verify_bijection_prefix, PatchMap, PermutationHandle,
    SATURATED,
};
use crate::sets::{self, SetHandle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Core,
    Weakening,
    Partition,
    Permutation,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Core,
        Suite::Weakening,
        Suite::Partition,
        Suite::Permutation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Core => "core",
            Suite::Weakening => "weakening",
            Suite::Partition => "partition",
            Suite::Permutation => "permutation",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                format!("unknown suite `{s}` (expected core, weakening, partition or permutation)")
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub law: String,
    pub trial: u64,
    pub witness: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub trials: u64,
    pub prefix: u64,
    pub seed: u64,
    pub laws: Vec<String>,
    pub checks: u64,
    pub violations: Vec<Violation>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A single law instance.
enum Check {
    Eq(SetHandle, SetHandle),
    Subset(SetHandle, SetHandle),
    /// `|lhs(n)| ≤ rhs(n)` for every `1 ≤ n ≤ N`, with both sides counts.
    Bound(Box<dyn Fn(u64) -> Result<(i128, i128)>>),
}

fn least_difference(x: &[u64], y: &[u64]) -> Option<u64> {
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => return Some(x[i]),
            std::cmp::Ordering::Greater => return Some(y[j]),
        }
    }
    x.get(i).or_else(|| y.get(j)).copied()
}

fn first_missing(x: &[u64], y: &[u64]) -> Option<u64> {
    x.iter().copied().find(|v| y.binary_search(v).is_err())
}

impl Check {
    /// `Ok(None)` on success, `Ok(Some((witness, detail)))` on violation.
    fn run(&self, n: u64) -> Result<Option<(u64, String)>> {
        match self {
            Check::Eq(l, r) => {
                let (x, y) = (l.prefix(n)?, r.prefix(n)?);
                Ok(least_difference(&x, &y).map(|w| {
                    let side = if x.binary_search(&w).is_ok() {
                        "left"
                    } else {
                        "right"
                    };
                    (w, format!("{w} is only on the {side}"))
                }))
            }
            Check::Subset(l, r) => {
                let (x, y) = (l.prefix(n)?, r.prefix(n)?);
                Ok(first_missing(&x, &y).map(|w| (w, format!("{w} is not in the superset"))))
            }
            Check::Bound(f) => {
                for k in 1..=n {
                    let (lhs, rhs) = f(k)?;
                    if lhs > rhs {
                        return Ok(Some((k, format!("{lhs} > {rhs} at n = {k}"))));
                    }
                }
                Ok(None)
            }
        }
    }
}

type Laws = Vec<(&'static str, Check)>;

fn trial_set(seed: u64, trial: u64, slot: u64, b: EvaluationBudget) -> Result<SetHandle> {
    Ok(bernoulli_ratio(1, 2, child_seed(seed, trial * 8 + slot))?.with_budget(b))
}

fn core_laws(a: &SetHandle, bb: &SetHandle, c: &SetHandle) -> Laws {
    use sets::{compl, intersect, into, omega, union, within};
    let ab = into(bb, a);
    vec![
        ("omega into A is A", Check::Eq(into(&omega(), a), a.clone())),
        ("A into omega is A", Check::Eq(into(a, &omega()), a.clone())),
        (
            "A within omega is A",
            Check::Eq(within(a, &omega()), a.clone()),
        ),
        (
            "into is associative",
            Check::Eq(into(bb, &into(a, c)), into(&ab, c)),
        ),
        (
            "within B and within compl B cover omega",
            Check::Eq(union(&within(bb, a), &within(&compl(bb), a)), omega()),
        ),
        (
            "within B and within compl B are disjoint",
            Check::Eq(
                intersect(&within(bb, a), &within(&compl(bb), a)),
                sets::empty(),
            ),
        ),
        (
            "into X and into compl X cover A",
            Check::Eq(union(&into(c, a), &into(&compl(c), a)), a.clone()),
        ),
        (
            "into X and into compl X are disjoint",
            Check::Eq(intersect(&into(c, a), &into(&compl(c), a)), sets::empty()),
        ),
        (
            "B into (A within (B into A)) is B",
            Check::Eq(into(bb, &within(a, &ab)), bb.clone()),
        ),
        (
            "(B into A) within (B into A) is omega",
            Check::Eq(within(&ab, &ab), omega()),
        ),
        (
            "B within (A into B) is omega",
            Check::Eq(within(bb, &into(a, bb)), omega()),
        ),
        (
            "(B within A) into B is a subset of B",
            Check::Subset(into(&within(bb, a), bb), bb.clone()),
        ),
        (
            "(B within A) into A is A and B",
            Check::Eq(into(&within(bb, a), a), intersect(a, bb)),
        ),
    ]
}

fn weakening_laws(a: &SetHandle) -> Laws {
    use sets::{compl, empty, evens, into, join, odds, within};
    let j = join(a, &compl(a));
    vec![
        (
            "evens within (A join compl A) is A",
            Check::Eq(within(&evens(), &j), a.clone()),
        ),
        (
            "odds within (A join compl A) is compl A",
            Check::Eq(within(&odds(), &j), compl(a)),
        ),
        (
            "A into (A join compl A) is A join empty",
            Check::Eq(into(a, &j), join(a, &empty())),
        ),
        (
            "compl A into (A join compl A) is empty join compl A",
            Check::Eq(into(&compl(a), &j), join(&empty(), &compl(a))),
        ),
    ]
}

const PARTITION_LEVELS: usize = 6;

fn partition_laws(seed: u64, trial: u64, b: EvaluationBudget) -> Result<Laws> {
    use sets::{empty, intersect, omega, union};
    let mut laws: Laws = Vec::new();
    let src = crate::bits::BitSource::new(child_seed(seed, trial * 8 + 7));
    let p = build_partition(ColumnSource::Bits(src), PARTITION_LEVELS, b)?;
    let mut cover = p.b(PARTITION_LEVELS)?;
    for i in 0..PARTITION_LEVELS {
        let ai = p.a(i)?;
        laws.push((
            "A_i and B_(i+1) split B_i",
            Check::Eq(union(&ai, &p.b(i + 1)?), p.b(i)?),
        ));
        laws.push((
            "A_i misses B_(i+1)",
            Check::Eq(intersect(&ai, &p.b(i + 1)?), empty()),
        ));
        laws.push((
            "B_(i+1) is a subset of B_i",
            Check::Subset(p.b(i + 1)?, p.b(i)?),
        ));
        for j in 0..i {
            laws.push((
                "A_j and A_i are disjoint",
                Check::Eq(intersect(&p.a(j)?, &ai), empty()),
            ));
        }
        cover = union(&cover, &ai);
    }
    laws.push((
        "pieces and remainder cover omega",
        Check::Eq(cover, omega()),
    ));

    let r = RealSpec::from_ratio(1, 3)?;
    let xr = build_xr(&r, &p);
    let mut reached = empty();
    for i in 0..PARTITION_LEVELS {
        let ai = p.a(i)?;
        let expect = if r.bit(i as u64) { ai.clone() } else { empty() };
        laws.push((
            "X_r meets A_i in all or nothing",
            Check::Eq(intersect(&xr, &ai), expect),
        ));
        reached = union(&reached, &ai);
    }
    laws.push((
        "X_r truncation matches the first pieces",
        Check::Eq(
            intersect(&xr, &reached),
            truncated_xr(&r, &p, PARTITION_LEVELS)?,
        ),
    ));

    if trial == 0 {
        let ruler = build_partition(ColumnSource::Constant(sets::evens()), PARTITION_LEVELS, b)?;
        for i in 0..PARTITION_LEVELS {
            let closed = sets::arithmetic(1 << i, 2 << i)?;
            laws.push((
                "ruler piece A_i is 2^i(2k+1)",
                Check::Eq(ruler.a(i)?, closed),
            ));
        }
    }
    Ok(laws)
}

fn permutation_laws(
    a: &SetHandle,
    bb: &SetHandle,
    c: &SetHandle,
    seed: u64,
    trial: u64,
) -> Result<Laws> {
    use sets::{apply, diff, empty, evens, factorials, intersect, into, join, within};
    let mut laws: Laws = Vec::new();
    let b = a.budget();
    let shuffle = block_shuffle(16, child_seed(seed, trial * 8 + 6))?;
    let hat = join_hat(&shuffle);
    laws.push((
        "join_hat image off the factorials ignores the odd part",
        Check::Eq(
            diff(&apply(&hat, &join(a, bb)), &factorials()),
            diff(&apply(&hat, &join(a, &empty())), &factorials()),
        ),
    ));

    let plain = apply(
        &join_hat(&PermutationHandle::identity()),
        &join(a, &empty()),
    );
    let (a2, f) = (a.clone(), factorials().with_budget(b));
    laws.push((
        "join_hat count stays within |F|n| + 1 of A",
        Check::Bound(Box::new(move |n| {
            let gap = plain.count(n)? as i128 - a2.count(n)? as i128;
            Ok((gap.abs(), f.count(n)? as i128 + 1))
        })),
    ));

    // C = evens, f(c_n) = n, H = B into C.
    let dom = evens().with_budget(b);
    let h = into(bb, &dom);
    let pf = patch_bijection(PatchMap::Index, &dom, &h);
    let off = diff(&intersect(c, &dom), &h);
    laws.push((
        "patched bijection carries (A and C) minus H to f(A and C) minus f(H)",
        Check::Eq(
            apply(&pf, &off),
            diff(&within(&intersect(c, &dom), &dom), &within(&h, &dom)),
        ),
    ));
    let (pf2, dom2, h2) = (pf.clone(), dom.clone(), h.clone());
    laws.push((
        "patched bijection agrees with f off H",
        Check::Bound(Box::new(move |n| {
            let m = n - 1;
            if dom2.member(m)? && !h2.member(m)? {
                let expect = dom2.count(m)?;
                Ok((i128::from(pf2.forward(m)? != expect), 0))
            } else {
                Ok((0, 0))
            }
        })),
    ));

    for p in [shuffle, hat, pf] {
        let b2 = b;
        laws.push((
            "permutation is injective and inverts on the prefix",
            Check::Bound(Box::new(move |n| {
                if n == 1 {
                    verify_bijection_prefix(&p, 1, &b2)?;
                }
                let m = n - 1;
                let v = p.forward(m)?;
                if v == SATURATED {
                    return Ok((0, 0));
                }
                Ok((i128::from(p.inverse(v)? != m), 0))
            })),
        ));
    }

    let w = 16;
    let moved = apply(&block_shuffle(w, child_seed(seed, trial * 8 + 5))?, a);
    let (a3, m3) = (a.clone(), moved.clone());
    laws.push((
        "block shuffle preserves counts at block boundaries",
        Check::Bound(Box::new(move |n| {
            if n % w == 0 {
                Ok(((m3.count(n)? as i128 - a3.count(n)? as i128).abs(), 0))
            } else {
                Ok((0, 0))
            }
        })),
    ));
    Ok(laws)
}

/// Names of the laws in a suite, in the order they are checked.
pub fn law_names(suite: Suite) -> Vec<String> {
    let b = EvaluationBudget::default();
    let laws = build_laws(suite, 0, 0, b).unwrap_or_default();
    let mut names: Vec<String> = Vec::new();
    for (name, _) in laws {
        if !names.iter().any(|n| n == name) {
            names.push(name.to_string());
        }
    }
    names
}

fn build_laws(suite: Suite, seed: u64, trial: u64, b: EvaluationBudget) -> Result<Laws> {
    let a = trial_set(seed, trial, 0, b)?;
    let bb = trial_set(seed, trial, 1, b)?;
    let c = trial_set(seed, trial, 2, b)?;
    Ok(match suite {
        Suite::Core => core_laws(&a, &bb, &c),
        Suite::Weakening => weakening_laws(&a),
        Suite::Partition => partition_laws(seed, trial, b)?,
        Suite::Permutation => permutation_laws(&a, &bb, &c, seed, trial)?,
    })
}

fn run_trial(
    suite: Suite,
    seed: u64,
    trial: u64,
    n: u64,
    b: EvaluationBudget,
) -> Result<(u64, Vec<Violation>)> {
    let laws = build_laws(suite, seed, trial, b)?;
    let mut violations = Vec::new();
    for (name, check) in &laws {
        if let Some((witness, detail)) = check.run(n)? {
            violations.push(Violation {
                law: name.to_string(),
                trial,
                witness,
                detail,
            });
        }
    }
    Ok((laws.len() as u64, violations))
}

/// Runs every law of `suite` on `trials` seeded trial sets at prefix `n`.
///
/// Trials run in parallel when the `parallel` feature is on; the report is
/// ordered by trial either way.
pub fn run_suite(
    suite: Suite,
    trials: u64,
    seed: u64,
    n: u64,
    budget: EvaluationBudget,
) -> Result<SuiteReport> {
    let ids: Vec<u64> = (0..trials).collect();
    let results = par::map(&ids, |&t| run_trial(suite, seed, t, n, budget));
    assemble(suite, trials, seed, n, results)
}

/// The sequential reference for [`run_suite`].
pub fn run_suite_sequential(
    suite: Suite,
    trials: u64,
    seed: u64,
    n: u64,
    budget: EvaluationBudget,
) -> Result<SuiteReport> {
    let ids: Vec<u64> = (0..trials).collect();
    let results = par::map_sequential(&ids, |&t| run_trial(suite, seed, t, n, budget));
    assemble(suite, trials, seed, n, results)
}

fn assemble(
    suite: Suite,
    trials: u64,
    seed: u64,
    n: u64,
    results: Vec<Result<(u64, Vec<Violation>)>>,
) -> Result<SuiteReport> {
    let mut checks = 0;
    let mut violations = Vec::new();
    for r in results {
        let (c, v) = r?;
        checks += c;
        violations.extend(v);
    }
    Ok(SuiteReport {
        suite,
        trials,
        prefix: n,
        seed,
        laws: law_names(suite),
        checks,
        violations,
    })
}
