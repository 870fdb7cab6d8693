use std::cell::{Cell, RefCell};
use std::fmt;
use std::rc::Rc;

use crate::bits::BitSource;
use crate::budget::EvaluationBudget;
use crate::error::{Result, SetError};
use crate::sets::{self, SetHandle};

use super::RealSpec;

pub const DEFAULT_INDEX_CAP: usize = 64;

/// Where the columns `X^[i]` come from.
#[derive(Clone)]
pub enum ColumnSource {
    Bits(BitSource),
    /// Every column is the same set (`column=evens` gives the ruler family).
    Constant(SetHandle),
    /// Explicit columns; requesting a level past the end is an error.
    List(Vec<SetHandle>),
}

impl fmt::Debug for ColumnSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnSource::Bits(src) => write!(f, "Bits({src})"),
            ColumnSource::Constant(s) => write!(f, "Constant({})", s.kind_name()),
            ColumnSource::List(v) => write!(f, "List(len={})", v.len()),
        }
    }
}

impl ColumnSource {
    /// Parses `seed:<n>[,mode=derived|pairing]` or `column=<primitive>`
    /// where the primitive is one of `omega`, `empty`, `evens`, `odds`,
    /// `factorials`.
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(name) = s.strip_prefix("column=") {
            let set = match name {
                "omega" => sets::omega(),
                "empty" => sets::empty(),
                "evens" => sets::evens(),
                "odds" => sets::odds(),
                "factorials" => sets::factorials(),
                other => return Err(SetError::Domain(format!("unknown column set `{other}`"))),
            };
            return Ok(ColumnSource::Constant(set));
        }
        s.parse::<BitSource>()
            .map(ColumnSource::Bits)
            .map_err(SetError::Domain)
    }

    fn column(&self, i: usize, budget: EvaluationBudget) -> Result<SetHandle> {
        match self {
            ColumnSource::Bits(src) => {
                let i = u32::try_from(i)
                    .map_err(|_| SetError::Domain("column index too large".into()))?;
                Ok(src.column(i, budget))
            }
            ColumnSource::Constant(s) => Ok(s.with_budget(budget)),
            ColumnSource::List(v) => {
                v.get(i)
                    .map(|s| s.with_budget(budget))
                    .ok_or(SetError::IndexCapExceeded {
                        value: 0,
                        cap: v.len(),
                    })
            }
        }
    }
}

#[derive(Clone)]
struct Level {
    column: SetHandle,
    a: SetHandle,
    b_next: SetHandle,
}

struct FamilyInner {
    source: ColumnSource,
    budget: EvaluationBudget,
    cap: Cell<usize>,
    b0: SetHandle,
    levels: RefCell<Vec<Level>>,
}

/// The disjoint family `A_i = X̄^[i] ▷ B_i`, `B_{i+1} = X^[i] ▷ B_i`,
/// `B_0 = ω`, built lazily level by level.
#[derive(Clone)]
pub struct PartitionFamily(Rc<FamilyInner>);

impl fmt::Debug for PartitionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartitionFamily")
            .field("source", &self.0.source)
            .field("levels", &self.levels_built())
            .field("cap", &self.cap())
            .finish()
    }
}

/// Builds the first `k` levels of the partition.
pub fn build_partition(
    source: ColumnSource,
    k: usize,
    budget: EvaluationBudget,
) -> Result<PartitionFamily> {
    if k == 0 {
        return Err(SetError::Domain(
            "a partition needs at least one level".into(),
        ));
    }
    let family = PartitionFamily(Rc::new(FamilyInner {
        source,
        budget,
        cap: Cell::new(DEFAULT_INDEX_CAP.max(k)),
        b0: sets::omega().with_budget(budget),
        levels: RefCell::new(Vec::new()),
    }));
    family.ensure_levels(k)?;
    Ok(family)
}

impl PartitionFamily {
    pub fn budget(&self) -> EvaluationBudget {
        self.0.budget
    }

    pub fn source(&self) -> &ColumnSource {
        &self.0.source
    }

    /// Largest number of levels searched by [`partition_index`](Self::partition_index)
    /// and by `X_r` membership.
    pub fn cap(&self) -> usize {
        self.0.cap.get()
    }

    pub fn set_cap(&self, cap: usize) {
        self.0.cap.set(cap);
    }

    pub fn levels_built(&self) -> usize {
        self.0.levels.borrow().len()
    }

    pub fn ensure_levels(&self, k: usize) -> Result<()> {
        loop {
            let built = self.levels_built();
            if built >= k {
                return Ok(());
            }
            let b = if built == 0 {
                self.0.b0.clone()
            } else {
                self.0.levels.borrow()[built - 1].b_next.clone()
            };
            let column = self.0.source.column(built, self.0.budget)?;
            let level = Level {
                a: sets::into(&sets::compl(&column), &b),
                b_next: sets::into(&column, &b),
                column,
            };
            self.0.levels.borrow_mut().push(level);
        }
    }

    fn level(&self, i: usize) -> Result<Level> {
        self.ensure_levels(i + 1)?;
        Ok(self.0.levels.borrow()[i].clone())
    }

    /// The piece `A_i`.
    pub fn a(&self, i: usize) -> Result<SetHandle> {
        Ok(self.level(i)?.a)
    }

    /// The remainder `B_i`; `B_0 = ω`.
    pub fn b(&self, i: usize) -> Result<SetHandle> {
        if i == 0 {
            Ok(self.0.b0.clone())
        } else {
            Ok(self.level(i - 1)?.b_next)
        }
    }

    /// The column `X^[i]` used at level `i`.
    pub fn column(&self, i: usize) -> Result<SetHandle> {
        Ok(self.level(i)?.column)
    }

    /// The unique `i` with `m ∈ A_i`, searching levels below the cap.
    pub fn partition_index(&self, m: u64) -> Result<usize> {
        for i in 0..self.cap() {
            if self.a(i)?.member(m)? {
                return Ok(i);
            }
        }
        Err(SetError::IndexCapExceeded {
            value: m,
            cap: self.cap(),
        })
    }

    /// For a constant column `C`, the length `L ≤ limit` of the run
    /// `[0, L) ⊆ C`.
    ///
    /// An element sitting at index `j < L` of some `B_i` stays at index `j`
    /// of every later `B`, so it lies in no `A_n` at all.
    fn persistent_run(&self, limit: u64) -> Option<u64> {
        match &self.0.source {
            ColumnSource::Constant(c) => {
                let c = c.with_budget(self.0.budget);
                let run = (0..limit)
                    .find(|&n| !matches!(c.member(n), Ok(true)))
                    .unwrap_or(limit);
                (run > 0).then_some(run)
            }
            _ => None,
        }
    }
}

/// Members of `X_r` in `[lo, hi)`.
///
/// Levels are peeled off until every value in the range is either assigned
/// to a piece or certified to lie in none (constant-column families only).
/// Anything still unresolved at the cap is an error.
pub(crate) fn decide_xr(
    real: &RealSpec,
    family: &PartitionFamily,
    lo: u64,
    hi: u64,
    b: &EvaluationBudget,
) -> Result<Vec<u64>> {
    let mut member = vec![false; (hi - lo) as usize];
    let run = family.persistent_run(hi);
    let mut i = 0usize;
    loop {
        if i >= family.cap() {
            let rest = family.b(i)?.with_budget(*b).elements_between(lo, hi)?;
            return Err(SetError::IndexCapExceeded {
                value: rest[0],
                cap: family.cap(),
            });
        }
        let bit = real.bit(i as u64);
        if bit {
            for m in family.a(i)?.with_budget(*b).elements_between(lo, hi)? {
                member[(m - lo) as usize] = true;
            }
        }
        let next = family.b(i + 1)?.with_budget(*b);
        let unresolved = next.count(hi)? - next.count(lo)?;
        if unresolved == 0 {
            break;
        }
        if let Some(run) = run {
            if next.count(hi)? <= run {
                break;
            }
        }
        i += 1;
    }
    Ok(member
        .iter()
        .zip(lo..hi)
        .filter(|(&is, _)| is)
        .map(|(_, m)| m)
        .collect())
}
