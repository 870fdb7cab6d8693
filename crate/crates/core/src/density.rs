//! Exact prefix densities and finite evidence about limit densities.
//!
//! Everything here is a finite computation: `ρ_n(A) = |A↾n| / n` is exact,
//! while `tail_sup` / `tail_inf` are only estimates of `limsup` / `liminf`.

use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Result, SetError};
use crate::par;
use crate::permutations::PermSpec;
use crate::sets::{self, SetHandle};

/// Fraction of checkpoints (from the end) summarised by tail sup/inf.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;

fn ratio(count: u64, n: u64) -> BigRational {
    BigRational::new(BigInt::from(count), BigInt::from(n))
}

/// `ρ_n(A) = |A↾n| / n` as an exact rational. `n = 0` is a domain error.
pub fn density_at(a: &SetHandle, n: u64) -> Result<BigRational> {
    if n == 0 {
        return Err(SetError::Domain("density is undefined at n = 0".into()));
    }
    Ok(ratio(a.count(n)?, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Counting,
    Principal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    pub n: u64,
    pub count: u64,
    pub rho: BigRational,
}

impl Checkpoint {
    fn new(n: u64, count: u64) -> Self {
        Checkpoint {
            n,
            count,
            rho: ratio(count, n),
        }
    }
}

impl Serialize for Checkpoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Checkpoint", 5)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("count", &self.count)?;
        st.serialize_field("rho_num", &self.rho.numer().to_string())?;
        st.serialize_field("rho_den", &self.rho.denom().to_string())?;
        st.serialize_field("rho_float", &format_sig(to_f64(&self.rho)))?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityReport {
    pub estimator: EstimatorKind,
    pub checkpoints: Vec<Checkpoint>,
    pub tail_sup: BigRational,
    pub tail_inf: BigRational,
    /// Number of trailing checkpoints the tail summaries range over.
    pub tail_len: usize,
}

impl DensityReport {
    fn from_checkpoints(
        estimator: EstimatorKind,
        checkpoints: Vec<Checkpoint>,
        tail_fraction: f64,
    ) -> Self {
        let tail_len = if checkpoints.is_empty() {
            0
        } else {
            ((checkpoints.len() as f64 * tail_fraction).ceil() as usize).clamp(1, checkpoints.len())
        };
        let tail = &checkpoints[checkpoints.len() - tail_len..];
        let tail_sup = tail
            .iter()
            .map(|c| &c.rho)
            .max()
            .cloned()
            .unwrap_or_else(BigRational::zero);
        let tail_inf = tail
            .iter()
            .map(|c| &c.rho)
            .min()
            .cloned()
            .unwrap_or_else(BigRational::zero);
        DensityReport {
            estimator,
            checkpoints,
            tail_sup,
            tail_inf,
            tail_len,
        }
    }

    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }

    /// `tail_sup − tail_inf`.
    pub fn tail_spread(&self) -> BigRational {
        &self.tail_sup - &self.tail_inf
    }

    /// CSV with the fixed column order `n,count,rho_num,rho_den,rho_float`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,count,rho_num,rho_den,rho_float\n");
        for c in &self.checkpoints {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.n,
                c.count,
                c.rho.numer(),
                c.rho.denom(),
                format_sig(to_f64(&c.rho))
            );
        }
        out
    }
}

impl Serialize for DensityReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("DensityReport", 6)?;
        st.serialize_field("estimator", &self.estimator)?;
        st.serialize_field("tail_len", &self.tail_len)?;
        st.serialize_field("tail_sup", &self.tail_sup.to_string())?;
        st.serialize_field("tail_inf", &self.tail_inf.to_string())?;
        st.serialize_field("tail_sup_float", &format_sig(to_f64(&self.tail_sup)))?;
        st.serialize_field("tail_inf_float", &format_sig(to_f64(&self.tail_inf)))?;
        st.serialize_field("checkpoints", &self.checkpoints)?;
        st.end()
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Renders `x` with 12 significant digits in positional notation.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Where counting checkpoints are placed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Grid {
    /// `n_j = ⌈n0 · ratio^j⌉` for `j = 0, 1, …`, plus the final `max_n`.
    Geometric {
        n0: u64,
        ratio: f64,
    },
    /// `step, 2·step, …`, plus the final `max_n`.
    Linear {
        step: u64,
    },
    Explicit {
        points: Vec<u64>,
    },
}

impl Default for Grid {
    fn default() -> Self {
        Grid::Geometric { n0: 64, ratio: 1.3 }
    }
}

impl Grid {
    /// Checkpoints in `[1, max_n]`, strictly increasing.
    pub fn points(&self, max_n: u64) -> Vec<u64> {
        let mut pts: Vec<u64> = match self {
            Grid::Geometric { n0, ratio } => {
                let mut v = Vec::new();
                let mut x = (*n0).max(1) as f64;
                while x.ceil() < max_n as f64 {
                    v.push(x.ceil() as u64);
                    x *= ratio.max(1.0 + f64::EPSILON);
                }
                v
            }
            Grid::Linear { step } => {
                let step = (*step).max(1);
                (1..).map(|j| j * step).take_while(|&n| n < max_n).collect()
            }
            Grid::Explicit { points } => points
                .iter()
                .copied()
                .filter(|&n| n >= 1 && n <= max_n)
                .collect(),
        };
        if max_n >= 1 && !matches!(self, Grid::Explicit { .. }) {
            pts.push(max_n);
        }
        pts.sort_unstable();
        pts.dedup();
        pts
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Grid::Geometric { n0, ratio } => write!(f, "geometric:n0={n0},ratio={ratio}"),
            Grid::Linear { step } => write!(f, "linear:step={step}"),
            Grid::Explicit { points } => {
                let pts: Vec<String> = points.iter().map(u64::to_string).collect();
                write!(f, "points:{}", pts.join(","))
            }
        }
    }
}

impl FromStr for Grid {
    type Err = String;

    /// `geometric`, `geometric:n0=64,ratio=1.3`, `linear:step=100`, or
    /// `points:10,20,30`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let kvs = || {
            rest.split(',')
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.split_once('=')
                        .ok_or_else(|| format!("expected key=value in `{p}`"))
                })
                .collect::<std::result::Result<Vec<_>, _>>()
        };
        match kind {
            "geometric" => {
                let (mut n0, mut ratio) = (64u64, 1.3f64);
                for (k, v) in kvs()? {
                    match k {
                        "n0" => n0 = v.parse().map_err(|_| format!("invalid n0 `{v}`"))?,
                        "ratio" | "g" => {
                            ratio = v.parse().map_err(|_| format!("invalid ratio `{v}`"))?
                        }
                        other => return Err(format!("unknown grid key `{other}`")),
                    }
                }
                if ratio.partial_cmp(&1.0) != Some(std::cmp::Ordering::Greater) || n0 == 0 {
                    return Err("geometric grid needs n0 ≥ 1 and ratio > 1".into());
                }
                Ok(Grid::Geometric { n0, ratio })
            }
            "linear" => {
                let mut step = 1u64;
                for (k, v) in kvs()? {
                    match k {
                        "step" => step = v.parse().map_err(|_| format!("invalid step `{v}`"))?,
                        other => return Err(format!("unknown grid key `{other}`")),
                    }
                }
                if step == 0 {
                    return Err("linear grid step must be positive".into());
                }
                Ok(Grid::Linear { step })
            }
            "points" => {
                let points = rest
                    .split(',')
                    .map(|p| p.parse().map_err(|_| format!("invalid checkpoint `{p}`")))
                    .collect::<std::result::Result<Vec<u64>, _>>()?;
                Ok(Grid::Explicit { points })
            }
            other => Err(format!("unknown grid `{other}`")),
        }
    }
}

/// Counting-estimator report on `grid` up to `max_n`.
pub fn density_report(a: &SetHandle, grid: &Grid, max_n: u64) -> Result<DensityReport> {
    density_report_with_tail(a, grid, max_n, DEFAULT_TAIL_FRACTION)
}

pub fn density_report_with_tail(
    a: &SetHandle,
    grid: &Grid,
    max_n: u64,
    tail_fraction: f64,
) -> Result<DensityReport> {
    let points = grid.points(max_n);
    if let Some(&top) = points.last() {
        a.count(top)?;
    }
    let checkpoints = points
        .into_iter()
        .map(|n| Ok(Checkpoint::new(n, a.count(n)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityReport::from_checkpoints(
        EstimatorKind::Counting,
        checkpoints,
        tail_fraction,
    ))
}

/// Checkpoints along the principal function: `(a_k + 1, (k+1)/(a_k + 1))`
/// and `(a_k, k / a_k)` for `k < k_max`, skipping `n = 0`. Along these
/// checkpoints the tail sup and inf track `limsup n / a_n` and
/// `liminf n / a_n`.
pub fn principal_checkpoints(a: &SetHandle, k_max: u64) -> Result<DensityReport> {
    let mut checkpoints = Vec::with_capacity(2 * k_max as usize);
    for k in 0..k_max {
        let ak = a.nth(k)?;
        if ak > 0 {
            checkpoints.push(Checkpoint::new(ak, k));
        }
        checkpoints.push(Checkpoint::new(ak + 1, k + 1));
    }
    checkpoints.dedup_by_key(|c| c.n);
    Ok(DensityReport::from_checkpoints(
        EstimatorKind::Principal,
        checkpoints,
        DEFAULT_TAIL_FRACTION,
    ))
}

/// Density reports of `π(A)` across a permutation family.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub entries: Vec<ProbeEntry>,
    #[serde(serialize_with = "ser_ratio")]
    pub min_tail_inf: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub max_tail_sup: BigRational,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeEntry {
    pub permutation: String,
    pub report: DensityReport,
}

fn ser_ratio<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl ProbeReport {
    fn from_entries(entries: Vec<ProbeEntry>) -> Self {
        let min_tail_inf = entries
            .iter()
            .map(|e| &e.report.tail_inf)
            .min()
            .cloned()
            .unwrap_or_else(BigRational::zero);
        let max_tail_sup = entries
            .iter()
            .map(|e| &e.report.tail_sup)
            .max()
            .cloned()
            .unwrap_or_else(BigRational::zero);
        ProbeReport {
            entries,
            min_tail_inf,
            max_tail_sup,
        }
    }

    /// `max tail_sup − min tail_inf` across the family. A large spread is
    /// evidence that the set has no intrinsic density.
    pub fn spread(&self) -> BigRational {
        &self.max_tail_sup - &self.min_tail_inf
    }
}

/// Probes `A` with every permutation in `family`, sequentially.
pub fn intrinsic_probe(
    a: &SetHandle,
    family: &[PermSpec],
    grid: &Grid,
    max_n: u64,
) -> Result<ProbeReport> {
    let entries = family
        .iter()
        .map(|spec| {
            let pi = spec.build()?;
            Ok(ProbeEntry {
                permutation: spec.to_string(),
                report: density_report(&sets::apply(&pi, a), grid, max_n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeReport::from_entries(entries))
}

/// Like [`intrinsic_probe`] but evaluates family members in parallel. Set
/// handles are single-owner, so `build` is called once per member to make a
/// private copy of `A`.
pub fn intrinsic_probe_with<F>(
    build: F,
    family: &[PermSpec],
    grid: &Grid,
    max_n: u64,
) -> Result<ProbeReport>
where
    F: Fn() -> Result<SetHandle> + Sync + Send,
{
    let entries = par::map(family, |spec| {
        let a = build()?;
        let pi = spec.build()?;
        Ok(ProbeEntry {
            permutation: spec.to_string(),
            report: density_report(&sets::apply(&pi, &a), grid, max_n)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ProbeReport::from_entries(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{empty, evens, factorials, join, omega};

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn density_examples() {
        assert_eq!(density_at(&evens(), 10).unwrap(), q(1, 2));
        assert_eq!(density_at(&factorials(), 10).unwrap(), q(3, 10));
        assert_eq!(density_at(&omega(), 7).unwrap(), q(1, 1));
        assert!(matches!(density_at(&omega(), 0), Err(SetError::Domain(_))));
    }

    #[test]
    fn principal_examples() {
        let r = principal_checkpoints(&evens(), 5).unwrap();
        assert!(r.checkpoints.contains(&Checkpoint {
            n: 9,
            count: 5,
            rho: q(5, 9)
        }));
        assert!(r.checkpoints.contains(&Checkpoint {
            n: 8,
            count: 4,
            rho: q(1, 2)
        }));
        assert!(r.checkpoints.iter().all(|c| c.n > 0));

        let r = principal_checkpoints(&omega(), 50).unwrap();
        assert!(r.checkpoints.iter().all(|c| c.rho == q(1, 1)));

        let r = principal_checkpoints(&factorials(), 4).unwrap();
        assert!(r.checkpoints.contains(&Checkpoint {
            n: 24,
            count: 3,
            rho: q(1, 8)
        }));
    }

    #[test]
    fn report_examples() {
        let r = density_report(&evens(), &Grid::default(), 100_000).unwrap();
        for c in &r.checkpoints {
            let dev = &c.rho - q(1, 2);
            assert!(dev.clone() * BigRational::from_integer(c.n.into()) <= q(1, 1));
            assert!(dev * BigRational::from_integer(c.n.into()) >= q(-1, 1));
        }
        assert!(r.tail_spread() <= q(2, 64));

        let r = density_report(&empty(), &Grid::Linear { step: 7 }, 100).unwrap();
        assert!(r.checkpoints.iter().all(|c| c.rho.is_zero()));

        let r = density_report(&join(&evens(), &empty()), &Grid::default(), 100_000).unwrap();
        assert!((to_f64(&r.tail_sup) - 0.25).abs() < 0.01);
        assert!((to_f64(&r.tail_inf) - 0.25).abs() < 0.01);
    }

    #[test]
    fn report_invariants() {
        let a = crate::constructions::bernoulli_ratio(1, 3, 8).unwrap();
        let r = density_report(&a, &Grid::default(), 50_000).unwrap();
        assert!(r.tail_inf <= r.tail_sup);
        for w in r.checkpoints.windows(2) {
            assert!(w[0].n < w[1].n);
            assert!(w[0].count <= w[1].count);
        }
        for c in &r.checkpoints {
            assert!(c.rho >= q(0, 1) && c.rho <= q(1, 1));
        }
    }

    #[test]
    fn grids() {
        assert_eq!(Grid::default().points(100), vec![64, 84, 100]);
        assert_eq!(Grid::Linear { step: 30 }.points(100), vec![30, 60, 90, 100]);
        assert_eq!("geometric".parse::<Grid>().unwrap(), Grid::default());
        assert_eq!(
            "geometric:n0=10,ratio=2".parse::<Grid>().unwrap(),
            Grid::Geometric { n0: 10, ratio: 2.0 }
        );
        assert_eq!(
            "linear:step=5".parse::<Grid>().unwrap(),
            Grid::Linear { step: 5 }
        );
        assert_eq!(
            "points:3,1,9".parse::<Grid>().unwrap().points(5),
            vec![1, 3]
        );
        assert!("geometric:ratio=1".parse::<Grid>().is_err());
        assert!("spiral".parse::<Grid>().is_err());
    }

    #[test]
    fn csv_layout() {
        let r = density_report(
            &evens(),
            &Grid::Explicit {
                points: vec![3, 10],
            },
            10,
        )
        .unwrap();
        assert_eq!(
            r.to_csv(),
            "n,count,rho_num,rho_den,rho_float\n3,2,2,3,0.666666666667\n10,5,1,2,0.500000000000\n"
        );
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.5), "0.500000000000");
        assert_eq!(format_sig(1.0), "1.00000000000");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(0.00125), "0.00125000000000");
    }

    #[test]
    fn omega_probe_is_flat() {
        let family = PermSpec::default_family();
        let r = intrinsic_probe(&omega(), &family, &Grid::default(), 20_000).unwrap();
        assert_eq!(r.entries.len(), family.len());
        assert!(r.spread().is_zero());
        assert_eq!(r.min_tail_inf, q(1, 1));
    }

    #[test]
    fn probe_paths_agree() {
        let family = vec![
            PermSpec::Identity,
            PermSpec::BlockShuffle { width: 16, seed: 2 },
        ];
        let build = || crate::constructions::bernoulli_ratio(1, 2, 5);
        let a = intrinsic_probe(&build().unwrap(), &family, &Grid::default(), 10_000).unwrap();
        let b = intrinsic_probe_with(build, &family, &Grid::default(), 10_000).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
