//! Exact dyadic rationals `k / 2^e` and closed intervals of them.
//!
//! Every path of length `m` of the simple random walk has probability
//! `2^-m`, so every probability produced by the enumerators is dyadic and
//! can be carried exactly.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// A nonnegative dyadic rational `numerator / 2^exponent`, kept in lowest
/// terms (the numerator is odd unless the exponent is zero).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicProb {
    numerator: BigUint,
    exponent: u32,
}

impl DyadicProb {
    pub fn new(numerator: BigUint, exponent: u32) -> Self {
        let mut d = DyadicProb {
            numerator,
            exponent,
        };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        DyadicProb::new(BigUint::zero(), 0)
    }

    pub fn one() -> Self {
        DyadicProb::new(BigUint::one(), 0)
    }

    /// `2^-e`
    pub fn pow2_neg(e: u32) -> Self {
        DyadicProb::new(BigUint::one(), e)
    }

    /// `Σ_m counts[m] · 2^-m`
    pub fn from_length_counts(counts: &[u128]) -> Self {
        let Some(top) = counts.len().checked_sub(1) else {
            return DyadicProb::zero();
        };
        let mut num = BigUint::zero();
        for (m, &c) in counts.iter().enumerate() {
            if c != 0 {
                num += BigUint::from(c) << (top - m);
            }
        }
        DyadicProb::new(num, top as u32)
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    fn normalize(&mut self) {
        if self.numerator.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.numerator.trailing_zeros().unwrap_or(0);
        let shift = tz.min(u64::from(self.exponent));
        if shift > 0 {
            self.numerator >>= shift;
            self.exponent -= shift as u32;
        }
    }

    fn aligned(&self, other: &Self) -> (BigUint, BigUint, u32) {
        let e = self.exponent.max(other.exponent);
        (
            &self.numerator << (e - self.exponent),
            &other.numerator << (e - other.exponent),
            e,
        )
    }

    /// Multiply by `2^s`.
    pub fn mul_pow2(&self, s: u32) -> Self {
        if s <= self.exponent {
            DyadicProb::new(self.numerator.clone(), self.exponent - s)
        } else {
            DyadicProb::new(&self.numerator << (s - self.exponent), 0)
        }
    }

    /// `self^k`
    pub fn pow(&self, k: u32) -> Self {
        DyadicProb::new(self.numerator.pow(k), self.exponent * k)
    }

    /// `1 - self`, or `None` when `self > 1`.
    pub fn complement(&self) -> Option<Self> {
        let one = BigUint::one() << self.exponent;
        if self.numerator > one {
            None
        } else {
            Some(DyadicProb::new(one - &self.numerator, self.exponent))
        }
    }

    /// `min(self, 1)`
    pub fn clamp_to_one(self) -> Self {
        if self > DyadicProb::one() {
            DyadicProb::one()
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.numerator.bits();
        if bits == 0 {
            return 0.0;
        }
        let shift = bits.saturating_sub(64);
        let top = (&self.numerator >> shift).to_u64().unwrap_or(u64::MAX) as f64;
        let e = shift as i64 - i64::from(self.exponent);
        top * 2f64.powi(e as i32)
    }

    /// Natural logarithm, accurate even when the value underflows `f64`.
    pub fn ln(&self) -> f64 {
        let bits = self.numerator.bits();
        if bits == 0 {
            return f64::NEG_INFINITY;
        }
        let shift = bits.saturating_sub(64);
        let top = (&self.numerator >> shift).to_u64().unwrap_or(u64::MAX) as f64;
        top.ln() + (shift as f64 - f64::from(self.exponent)) * std::f64::consts::LN_2
    }
}

impl Add for &DyadicProb {
    type Output = DyadicProb;
    fn add(self, rhs: &DyadicProb) -> DyadicProb {
        let (a, b, e) = self.aligned(rhs);
        DyadicProb::new(a + b, e)
    }
}

impl Add for DyadicProb {
    type Output = DyadicProb;
    fn add(self, rhs: DyadicProb) -> DyadicProb {
        &self + &rhs
    }
}

impl Mul for &DyadicProb {
    type Output = DyadicProb;
    fn mul(self, rhs: &DyadicProb) -> DyadicProb {
        DyadicProb::new(
            &self.numerator * &rhs.numerator,
            self.exponent + rhs.exponent,
        )
    }
}

impl Mul for DyadicProb {
    type Output = DyadicProb;
    fn mul(self, rhs: DyadicProb) -> DyadicProb {
        &self * &rhs
    }
}

impl std::iter::Sum for DyadicProb {
    fn sum<I: Iterator<Item = DyadicProb>>(iter: I) -> Self {
        iter.fold(DyadicProb::zero(), |acc, x| &acc + &x)
    }
}

impl PartialOrd for DyadicProb {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicProb {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl fmt::Display for DyadicProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/2^{}", self.numerator, self.exponent)
        }
    }
}

/// Wire form: the numerator as a decimal string, never a float.
#[derive(Serialize, Deserialize)]
struct DyadicRepr {
    numerator: String,
    exponent: u32,
}

impl Serialize for DyadicProb {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DyadicRepr {
            numerator: self.numerator.to_str_radix(10),
            exponent: self.exponent,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicProb {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = DyadicRepr::deserialize(d)?;
        let numerator = BigUint::parse_bytes(repr.numerator.as_bytes(), 10)
            .ok_or_else(|| serde::de::Error::custom("numerator is not a decimal integer"))?;
        Ok(DyadicProb::new(numerator, repr.exponent))
    }
}

/// Rigorous bracket `[lower, upper]` on a probability.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbInterval {
    pub lower: DyadicProb,
    pub upper: DyadicProb,
}

impl ProbInterval {
    pub fn new(lower: DyadicProb, upper: DyadicProb) -> Self {
        debug_assert!(lower <= upper);
        ProbInterval { lower, upper }
    }

    pub fn point(p: DyadicProb) -> Self {
        ProbInterval {
            lower: p.clone(),
            upper: p,
        }
    }

    pub fn contains(&self, p: &DyadicProb) -> bool {
        &self.lower <= p && p <= &self.upper
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower.to_f64() + self.upper.to_f64())
    }

    pub fn width(&self) -> f64 {
        self.upper.to_f64() - self.lower.to_f64()
    }
}
