//! Scalar abstraction shared by the geometric layer.
//!
//! Interval endpoints, gap lengths and diameters are computed through
//! [`Scalar`], so the same code runs over exact rationals (the default,
//! [`crate::Rational`]) and over `f32`/`f64` for quick plotting or
//! sanity checks. Everything that must be decided exactly takes the
//! concrete rational type instead.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, Zero};

use crate::error::{Error, Result};

pub trait Scalar: Num + Clone + PartialOrd + fmt::Debug + FromPrimitive {
    fn from_count(v: u64) -> Self {
        Self::from_u64(v).expect("scalar type cannot represent an integer count")
    }

    /// `base^exp` by repeated squaring.
    fn pow_count(base: u64, exp: u32) -> Self {
        let mut acc = Self::one();
        let mut sq = Self::from_count(base);
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * sq.clone();
            }
            sq = sq.clone() * sq;
            e >>= 1;
        }
        acc
    }

    /// Exact for exact types; rounds for floats.
    fn from_big(v: &BigUint) -> Self {
        let radix = Self::from_count(1u64 << 32);
        v.to_u32_digits()
            .iter()
            .rev()
            .fold(Self::zero(), |acc, &d| {
                acc * radix.clone() + Self::from_count(d as u64)
            })
    }
}

impl<T> Scalar for T where T: Num + Clone + PartialOrd + fmt::Debug + FromPrimitive {}

pub(crate) fn big(v: u64) -> BigInt {
    BigInt::from(v)
}

pub(crate) fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(big(num), big(den))
}

pub(crate) fn from_biguint(v: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from_biguint(Sign::Plus, v.clone()))
}

/// Formats a rational as `p/q` (`p` alone when the denominator is 1).
pub fn format_rational(q: &BigRational) -> String {
    q.to_string()
}

/// Parses `p/q`, a bare integer, or a finite decimal such as `0.25`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let err = || Error::Parse(format!("cannot parse {s:?} as a rational"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err())?;
        let q: BigInt = q.trim().parse().map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| err())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let frac_part: BigInt = frac.parse().map_err(|_| err())?;
        let scale = num_traits::pow(BigInt::from(10u32), frac.len());
        let magnitude = BigRational::new(int_part.abs() * &scale + frac_part, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    let p: BigInt = s.parse().map_err(|_| err())?;
    Ok(BigRational::from_integer(p))
}

/// Decimal rendering with `digits` fractional digits, rounded toward
/// negative infinity (`round_up == false`) or positive infinity.
pub fn to_decimal(q: &BigRational, digits: usize, round_up: bool) -> String {
    let scale = num_traits::pow(BigInt::from(10u32), digits);
    let scaled = q.numer() * &scale;
    let den = q.denom();
    let v = if round_up {
        Integer::div_ceil(&scaled, den)
    } else {
        Integer::div_floor(&scaled, den)
    };
    let negative = v.is_negative();
    let mag = v.abs().to_string();
    let mag = if mag.len() <= digits {
        format!("{}{}", "0".repeat(digits + 1 - mag.len()), mag)
    } else {
        mag
    };
    let (int, frac) = mag.split_at(mag.len() - digits);
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod rational_str {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing a bracket as `["p/q", "p/q"]`.
pub mod rational_pair {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(
        q: &(BigRational, BigRational),
        s: S,
    ) -> Result<S::Ok, S::Error> {
        [super::format_rational(&q.0), super::format_rational(&q.1)].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<(BigRational, BigRational), D::Error> {
        let [a, b] = <[String; 2]>::deserialize(d)?;
        let parse = |s: &str| super::parse_rational(s).map_err(serde::de::Error::custom);
        Ok((parse(&a)?, parse(&b)?))
    }
}

/// Serde adapter for big integers as decimal strings.
pub mod biguint_str {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn is_integer(q: &BigRational) -> bool {
    q.denom().is_one()
}
