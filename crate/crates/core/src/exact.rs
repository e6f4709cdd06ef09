//! Exact rational helpers shared by the bound and schedule computations.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::highprec::nth_root_floor;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {input:?} as an exact number: {reason}")]
pub struct ParseNumberError {
    pub input: String,
    pub reason: &'static str,
}

/// Parses `"3"`, `"-0.125"`, `"1e-3"`, `"2.5E2"` or `"2/3"` into an exact rational.
pub fn parse_rational(input: &str) -> Result<BigRational, ParseNumberError> {
    let err = |reason| ParseNumberError {
        input: input.to_owned(),
        reason,
    };
    let s = input.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| err("bad exponent"))?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err("no digits"));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err("invalid character"));
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = if all_digits.is_empty() {
        BigInt::zero()
    } else {
        all_digits.parse().map_err(|_| err("invalid digits"))?
    };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(numer * ten.pow(scale as u32))
    } else {
        BigRational::new(numer, ten.pow(scale.unsigned_abs()))
    })
}

/// Exact value of a finite `f64`.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Renders a rational as `"n/d"`, or `"n"` for integers.
pub fn rational_string(x: &BigRational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn ceil_to_biguint(x: &BigRational) -> BigUint {
    x.ceil()
        .to_integer()
        .to_biguint()
        .unwrap_or_else(BigUint::zero)
}

/// `ceil(a^(1/degree))` for a non-negative rational `a`.
pub fn ceil_root(a: &BigRational, degree: u32) -> BigUint {
    assert!(!a.is_negative(), "root of a negative number");
    let floor = a.floor().to_integer().to_biguint().unwrap_or_default();
    let r = nth_root_floor(&floor, degree);
    if a.is_integer() && r.pow(degree) == floor {
        r
    } else {
        r + 1u32
    }
}

pub fn pow_rational(x: &BigRational, exp: u32) -> BigRational {
    num_traits::pow(x.clone(), exp as usize)
}

/// Positive exact rational exponent such as a smoothness `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PositiveRatio(Ratio<u32>);

impl PositiveRatio {
    pub fn new(numer: u32, denom: u32) -> Option<Self> {
        (numer > 0 && denom > 0).then(|| Self(Ratio::new(numer, denom)))
    }

    pub fn numer(&self) -> u32 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u32 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        f64::from(self.numer()) / f64::from(self.denom())
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.numer().into(), self.denom().into())
    }
}

impl fmt::Display for PositiveRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for PositiveRatio {
    type Err = ParseNumberError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let r = parse_rational(s)?;
        let err = |reason| ParseNumberError {
            input: s.to_owned(),
            reason,
        };
        if !r.is_positive() {
            return Err(err("must be positive"));
        }
        let n = r.numer().to_u32().ok_or_else(|| err("numerator too large"))?;
        let d = r.denom().to_u32().ok_or_else(|| err("denominator too large"))?;
        Ok(Self(Ratio::new(n, d)))
    }
}

impl Serialize for PositiveRatio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PositiveRatio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(f64),
        }
        let text = match Repr::deserialize(d)? {
            Repr::Text(t) => t,
            Repr::Number(x) => x.to_string(),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of decimal digits of `x` (1 for zero).
pub fn decimal_digits(x: &BigUint) -> usize {
    x.to_str_radix(10).len()
}

/// `log2(x)` for a positive big integer: exact exponent from the bit length,
/// fraction from the leading 64 bits.
pub fn log2_big(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "log2 of zero");
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_u64().unwrap() as f64;
    shift as f64 + top.log2()
}

pub fn one_over(n: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(n))
}
