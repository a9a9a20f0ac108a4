//! Exact overlap-ratio thresholds.
//!
//! Thresholds are kept as reduced fractions so that the strict comparison
//! `overlap > λ·|B|` is decided in integer arithmetic.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A threshold in `[0, 1)` on the overlap ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lambda(Ratio<u64>);

impl Lambda {
    pub const ZERO: Lambda = Lambda(Ratio::new_raw(0, 1));

    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidLambda(format!("{numer}/0 has a zero denominator")));
        }
        Self::from_ratio(Ratio::new(numer, denom))
    }

    pub fn from_ratio(r: Ratio<u64>) -> Result<Self> {
        if r.numer() >= r.denom() {
            return Err(Error::InvalidLambda(format!("{r} is not below 1")));
        }
        Ok(Lambda(r))
    }

    /// The largest threshold that still distinguishes overlaps of a structuring
    /// element with `measure` voxels: only full containment passes.
    pub fn full_containment(measure: u64) -> Self {
        assert!(measure > 0, "structuring element must be nonempty");
        Lambda(Ratio::new(measure - 1, measure))
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `overlap > λ · measure`, decided exactly.
    #[inline]
    pub fn admits(&self, overlap: u64, measure: u64) -> bool {
        (overlap as u128) * (*self.0.denom() as u128) > (*self.0.numer() as u128) * (measure as u128)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(0.0)
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Lambda {
    type Err = Error;

    /// Accepts `a/b` fractions and plain decimals such as `0.95` or `.5`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidLambda(format!("cannot parse `{s}` as a threshold"));
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Lambda::new(n, d);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 18 {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        if int != 0 {
            return Err(Error::InvalidLambda(format!("{s} is not below 1")));
        }
        let denom = 10u64.pow(frac.len() as u32);
        let numer: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        Lambda::new(numer, denom)
    }
}

impl Serialize for Lambda {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Lambda {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Signed rational coefficient for threshold-field bumps.
pub type Coefficient = Ratio<i64>;

pub(crate) fn coefficient_to_f64(c: &Coefficient) -> f64 {
    c.to_f64().unwrap_or(0.0)
}

/// Serializes a [`Coefficient`] as an `"n/d"` string.
pub(crate) mod coefficient_serde {
    use super::Coefficient;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Coefficient, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&format_args!("{}/{}", c.numer(), c.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Coefficient, D::Error> {
        let s = String::deserialize(d)?;
        let (n, den) = s.split_once('/').unwrap_or((&s, "1"));
        let n: i64 = n.trim().parse().map_err(serde::de::Error::custom)?;
        let den: i64 = den.trim().parse().map_err(serde::de::Error::custom)?;
        if den == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Coefficient::new(n, den))
    }
}
