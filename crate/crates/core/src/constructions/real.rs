use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::bits;
use crate::error::{Result, SetError};
use crate::sets::{Kind, SetHandle};
use crate::EvaluationBudget;

/// Where a real number in (0, 1) comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RealSource {
    Rational(BigRational),
    /// Bit `n` is 1 iff `n` is in the fair Bernoulli stream with this seed.
    Seed(u64),
}

#[derive(Debug, Default)]
struct LongDivision {
    bits: Vec<bool>,
    remainder: BigUint,
}

#[derive(Debug)]
struct RealInner {
    source: RealSource,
    denominator: BigUint,
    division: RefCell<LongDivision>,
}

/// A real `r ∈ (0, 1)` presented by its binary expansion.
///
/// Dyadic rationals use the terminating expansion, so `1/2` has bits `{0}`
/// rather than `{1, 2, 3, …}`.
#[derive(Debug, Clone)]
pub struct RealSpec(Rc<RealInner>);

impl PartialEq for RealSpec {
    fn eq(&self, other: &Self) -> bool {
        self.0.source == other.0.source
    }
}

impl RealSpec {
    pub fn from_rational(r: BigRational) -> Result<Self> {
        if !r.is_positive() || r >= BigRational::one() {
            return Err(SetError::Domain(format!("real {r} is not in (0, 1)")));
        }
        let numer = r.numer().to_biguint().expect("positive");
        let denominator = r.denom().to_biguint().expect("positive");
        Ok(RealSpec(Rc::new(RealInner {
            source: RealSource::Rational(r),
            denominator,
            division: RefCell::new(LongDivision {
                bits: Vec::new(),
                remainder: numer,
            }),
        })))
    }

    pub fn from_ratio(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(SetError::Domain("zero denominator".into()));
        }
        Self::from_rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn from_seed(seed: u64) -> Self {
        RealSpec(Rc::new(RealInner {
            source: RealSource::Seed(seed),
            denominator: BigUint::zero(),
            division: RefCell::new(LongDivision::default()),
        }))
    }

    pub fn source(&self) -> &RealSource {
        &self.0.source
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match &self.0.source {
            RealSource::Rational(r) => Some(r),
            RealSource::Seed(_) => None,
        }
    }

    /// Bit `n` of the expansion, i.e. the coefficient of `2^-(n+1)`.
    pub fn bit(&self, n: u64) -> bool {
        match &self.0.source {
            RealSource::Seed(seed) => bits::draw(*seed, n) < bits::HALF,
            RealSource::Rational(_) => {
                let mut div = self.0.division.borrow_mut();
                while div.bits.len() as u64 <= n {
                    if div.remainder.is_zero() {
                        return false;
                    }
                    let doubled = &div.remainder << 1u32;
                    if doubled >= self.0.denominator {
                        div.remainder = doubled - &self.0.denominator;
                        div.bits.push(true);
                    } else {
                        div.remainder = doubled;
                        div.bits.push(false);
                    }
                }
                div.bits[n as usize]
            }
        }
    }

    /// For dyadic rationals `p / 2^e`, the bound `e` past which all bits vanish.
    pub fn finite_bound(&self) -> Option<u64> {
        match &self.0.source {
            RealSource::Rational(_) => {
                let d = &self.0.denominator;
                let e = d.trailing_zeros()?;
                (d >> e).is_one().then_some(e)
            }
            RealSource::Seed(_) => None,
        }
    }

    /// `B_r`, the set of positions of 1-bits.
    pub fn bits_set(&self) -> SetHandle {
        SetHandle::from_kind(Kind::Expansion(self.clone()), EvaluationBudget::default())
    }

    /// `Σ_{n ∈ B_r, n < j} 2^-(n+1)`.
    pub fn partial_sum(&self, j: u64) -> BigRational {
        let mut acc = BigRational::zero();
        let two = BigInt::from(2);
        let mut weight = BigRational::new(BigInt::one(), two.clone());
        for n in 0..j {
            if self.bit(n) {
                acc += &weight;
            }
            weight /= &two;
        }
        acc
    }

    /// `⌊r · 2^64⌋`, the draw threshold for a Bernoulli(r) set.
    pub fn threshold(&self) -> u64 {
        match &self.0.source {
            RealSource::Rational(r) => {
                let scaled = (r.numer().to_biguint().expect("positive") << 64u32)
                    / r.denom().to_biguint().expect("positive");
                scaled.to_u64().expect("r < 1")
            }
            RealSource::Seed(_) => (0..64).fold(0u64, |t, n| (t << 1) | self.bit(n) as u64),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0.source {
            RealSource::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            RealSource::Seed(_) => self.threshold() as f64 / 2f64.powi(64),
        }
    }

    /// Parses `p/q`, `0.ddd`, or `seed:<n>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(seed) = s.strip_prefix("seed:") {
            let seed = seed
                .parse()
                .map_err(|_| SetError::Domain(format!("invalid seed `{seed}`")))?;
            return Ok(Self::from_seed(seed));
        }
        Self::from_rational(parse_rational(s)?)
    }
}

/// Parses `p/q` or a decimal `0.ddd` to an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || SetError::Domain(format!("`{s}` is not a rational or decimal literal"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.parse().map_err(|_| bad())?;
        let q: BigInt = q.parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(SetError::Domain("zero denominator".into()));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if int.is_empty()
            || frac.is_empty()
            || !int.bytes().chain(frac.bytes()).all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(digits, scale));
    }
    Err(bad())
}

impl fmt::Display for RealSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.source {
            RealSource::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            RealSource::Seed(s) => write!(f, "seed:{s}"),
        }
    }
}

/// Reduces `p/q`; used by the expression language for `u64` literals.
pub(crate) fn reduce(p: u64, q: u64) -> (u64, u64) {
    let g = p.gcd(&q);
    (p / g, q / g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: u64, q: u64) -> RealSpec {
        RealSpec::from_ratio(p, q).unwrap()
    }

    /// Independent oracle: bits by repeated doubling in `u128`.
    fn oracle_bits(p: u64, q: u64, len: usize) -> Vec<u64> {
        let (mut num, q) = (p as u128, q as u128);
        let mut out = Vec::new();
        for n in 0..len {
            num *= 2;
            if num >= q {
                num -= q;
                out.push(n as u64);
            }
        }
        out
    }

    #[test]
    fn expansion_examples() {
        assert_eq!(r(3, 4).bits_set().prefix(64).unwrap(), vec![0, 1]);
        assert_eq!(r(1, 2).bits_set().prefix(64).unwrap(), vec![0]);
        let odds: Vec<u64> = (0..64).filter(|n| n % 2 == 1).collect();
        assert_eq!(r(1, 3).bits_set().prefix(64).unwrap(), odds);
    }

    #[test]
    fn expansions_match_oracle() {
        for (p, q) in [(1, 7), (5, 12), (99, 100), (1, 1024), (12345, 65537)] {
            assert_eq!(
                r(p, q).bits_set().prefix(200).unwrap(),
                oracle_bits(p, q, 200)
            );
        }
    }

    #[test]
    fn domain_checks() {
        assert!(RealSpec::from_ratio(0, 3).is_err());
        assert!(RealSpec::from_ratio(3, 3).is_err());
        assert!(RealSpec::from_ratio(4, 3).is_err());
        assert!(RealSpec::from_ratio(1, 0).is_err());
        assert!(RealSpec::parse("1.5").is_err());
        assert!(RealSpec::parse("0.0").is_err());
        assert!(RealSpec::parse("abc").is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(RealSpec::parse("0.25").unwrap(), r(1, 4));
        assert_eq!(RealSpec::parse("2/6").unwrap(), r(1, 3));
        assert_eq!(RealSpec::parse("seed:4").unwrap(), RealSpec::from_seed(4));
        assert_eq!(RealSpec::parse("0.75").unwrap().to_string(), "3/4");
    }

    #[test]
    fn dyadic_bounds() {
        assert_eq!(r(1, 2).finite_bound(), Some(1));
        assert_eq!(r(3, 8).finite_bound(), Some(3));
        assert_eq!(r(1, 3).finite_bound(), None);
        assert_eq!(
            r(3, 4).bits_set().nth(2),
            Err(SetError::SetExhausted { index: 2, len: 2 })
        );
    }

    #[test]
    fn partial_sums_bracket_r() {
        for real in [r(1, 3), r(3, 4), r(5, 7), r(1, 1000)] {
            let value = real.as_rational().unwrap().clone();
            for j in 0..60 {
                let s = real.partial_sum(j);
                let gap =
                    BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(2), j as usize));
                assert!(s <= value);
                assert!(value < s.clone() + gap);
            }
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(r(1, 2).threshold(), 1 << 63);
        assert_eq!(r(1, 4).threshold(), 1 << 62);
        assert_eq!(r(1, 3).threshold(), u64::MAX / 3);
        let s = RealSpec::from_seed(9);
        let t = s.threshold();
        for n in 0..64 {
            assert_eq!((t >> (63 - n)) & 1 == 1, s.bit(n));
        }
    }
}
