//! Certified fixed-point arithmetic for fractional parts of `q * 2^(i/D)`.
//!
//! Every base `2^(i/D)` is held as a [`FixedPoint`] rounded *down* to `B`
//! fractional bits, so the error `2^(i/D) - value` lies in `[0, 2^-B)`. The
//! product with an integer `q` is then known up to `|q| * 2^-B`, and its
//! fractional part is reported as a [`TorusInterval`]. All quantities are
//! dyadic, so every decision reduces to exact integer comparison.

use std::ops::{Add, Sub};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Largest number of fractional bits the escalation loops will try.
pub const DEFAULT_PRECISION_CAP: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PrecisionError {
    #[error("precision insufficient: |q| * 2^-{frac_bits} >= 1/2")]
    Insufficient { frac_bits: u32 },
    #[error("precision cap of {cap} fractional bits exceeded")]
    CapExceeded { cap: u32 },
    #[error("root index {index} must lie in 1..{degree}")]
    RootIndex { index: u32, degree: u32 },
}

/// Integer `r` with `r^degree <= a < (r + 1)^degree`.
///
/// Integer Newton iteration started above the root; the seed comes from an
/// `f64` estimate of `log2(a)` and is verified before iterating.
pub fn nth_root_floor(a: &BigUint, degree: u32) -> BigUint {
    assert!(degree >= 1, "root degree must be at least 1");
    if degree == 1 || a.is_zero() || a.is_one() {
        return a.clone();
    }
    if a.bits() <= u64::from(degree) {
        // 2 <= a < 2^degree
        return BigUint::one();
    }

    let mut x = seed_above(a, degree);
    while x.pow(degree) <= *a {
        x <<= 1u32;
    }
    let d = BigUint::from(degree);
    let d_minus_one = BigUint::from(degree - 1);
    loop {
        let y = (&x * &d_minus_one + a / x.pow(degree - 1)) / &d;
        if y >= x {
            return x;
        }
        x = y;
    }
}

fn seed_above(a: &BigUint, degree: u32) -> BigUint {
    let bits = a.bits();
    let shift = bits.saturating_sub(64);
    let top = (a >> shift).to_u64().unwrap_or(u64::MAX) as f64;
    let log2_root = (shift as f64 + top.log2()) / f64::from(degree);
    // relative slack of 2^-20 covers the f64 error in log2_root
    let slack = 1.0 + 2f64.powi(-20);
    if log2_root < 60.0 {
        let s = (log2_root.exp2() * slack).ceil() as u64 + 1;
        return BigUint::from(s);
    }
    let exp = log2_root.floor() as u64 - 52;
    let head = ((log2_root - exp as f64).exp2() * slack).ceil() as u64 + 1;
    BigUint::from(head) << exp
}

/// Non-negative fixed-point number `mantissa / 2^frac_bits`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FixedPoint {
    mantissa: BigUint,
    frac_bits: u32,
}

impl FixedPoint {
    pub fn new(mantissa: BigUint, frac_bits: u32) -> Self {
        Self { mantissa, frac_bits }
    }

    pub fn zero(frac_bits: u32) -> Self {
        Self::new(BigUint::zero(), frac_bits)
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.mantissa.clone()),
            BigInt::one() << self.frac_bits,
        )
    }

    /// `floor(frac(value) * 2^64)`, the word used by the 64-bit fast path.
    pub fn frac_word(&self) -> u64 {
        let b = self.frac_bits;
        let scaled = if b >= 64 {
            &self.mantissa >> (b - 64)
        } else {
            &self.mantissa << (64 - b)
        };
        scaled.iter_u64_digits().next().unwrap_or(0)
    }

    /// Value rounded towards zero to `f64`.
    pub fn to_f64(&self) -> f64 {
        dyadic_to_f64_floor(&self.mantissa, self.frac_bits)
    }
}

/// `2^(index/degree)` rounded down to `frac_bits` fractional bits.
pub fn pow2_root(index: u32, degree: u32, frac_bits: u32) -> Result<FixedPoint, PrecisionError> {
    if index == 0 || index >= degree {
        return Err(PrecisionError::RootIndex { index, degree });
    }
    let exponent = u64::from(index) + u64::from(degree) * u64::from(frac_bits);
    let a = BigUint::one() << exponent;
    Ok(FixedPoint::new(nth_root_floor(&a, degree), frac_bits))
}

/// Closed arc of the circle `[0, 1)` with dyadic center and radius.
///
/// Both are stored as numerators over `2^frac_bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusInterval {
    center: BigUint,
    radius: BigUint,
    frac_bits: u32,
    wraps: bool,
}

impl TorusInterval {
    /// Exact point (radius zero).
    pub fn exact(center: BigUint, frac_bits: u32) -> Self {
        debug_assert!(center < (BigUint::one() << frac_bits));
        Self {
            center,
            radius: BigUint::zero(),
            frac_bits,
            wraps: false,
        }
    }

    pub fn center_units(&self) -> &BigUint {
        &self.center
    }

    pub fn radius_units(&self) -> &BigUint {
        &self.radius
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    /// True when the arc crosses the 0/1 seam.
    pub fn wraps(&self) -> bool {
        self.wraps
    }

    pub fn center(&self) -> BigRational {
        self.units_to_rational(&self.center)
    }

    pub fn radius(&self) -> BigRational {
        self.units_to_rational(&self.radius)
    }

    pub fn center_f64(&self) -> f64 {
        dyadic_to_f64_floor(&self.center, self.frac_bits)
    }

    pub fn radius_f64(&self) -> f64 {
        self.radius.to_f64().unwrap_or(f64::INFINITY) * (-f64::from(self.frac_bits)).exp2()
    }

    fn units_to_rational(&self, units: &BigUint) -> BigRational {
        BigRational::new(BigInt::from(units.clone()), BigInt::one() << self.frac_bits)
    }

    /// Whether `x` (taken modulo 1) lies on the arc.
    pub fn contains(&self, x: &BigRational) -> bool {
        let reduced = x - x.floor();
        let diff = (reduced - self.center()).abs();
        let one = BigRational::one();
        let torus = if diff > BigRational::new(1.into(), 2.into()) {
            one - diff
        } else {
            diff
        };
        torus <= self.radius()
    }

    /// The arc as one or two closed real intervals inside `[0, 2^frac_bits]`,
    /// in units of `2^-frac_bits`.
    pub fn pieces(&self) -> Pieces<BigInt> {
        seam_pieces(
            BigInt::from(self.center.clone()),
            BigInt::from(self.radius.clone()),
            BigInt::one() << self.frac_bits,
        )
    }
}

/// One or two closed intervals `(lo, hi)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pieces<T> {
    pub first: (T, T),
    pub second: Option<(T, T)>,
}

impl<T> Pieces<T> {
    pub fn iter(&self) -> impl Iterator<Item = &(T, T)> {
        std::iter::once(&self.first).chain(self.second.as_ref())
    }
}

/// Splits `[center - radius, center + radius]` at the seam of `[0, modulus)`.
/// Requires `radius < modulus / 2` and `0 <= center < modulus`.
pub fn seam_pieces<T>(center: T, radius: T, modulus: T) -> Pieces<T>
where
    T: Clone + Ord + Zero + Add<Output = T> + Sub<Output = T>,
{
    let lo = center.clone() - radius.clone();
    let hi = center + radius;
    if lo < T::zero() {
        Pieces {
            first: (lo + modulus.clone(), modulus),
            second: Some((T::zero(), hi)),
        }
    } else if hi >= modulus {
        Pieces {
            first: (lo, modulus.clone()),
            second: Some((T::zero(), hi - modulus)),
        }
    } else {
        Pieces {
            first: (lo, hi),
            second: None,
        }
    }
}

/// Certified enclosure of `frac(q * alpha_exact)` where `alpha` is the floor
/// approximation of `alpha_exact` at `alpha.frac_bits()` bits.
pub fn frac_mult_interval(q: &BigInt, alpha: &FixedPoint) -> Result<TorusInterval, PrecisionError> {
    let b = alpha.frac_bits;
    let radius = q.magnitude().clone();
    // radius * 2^-b < 1/2
    if (&radius << 1u32) >= (BigUint::one() << b) && !radius.is_zero() {
        return Err(PrecisionError::Insufficient { frac_bits: b });
    }
    let modulus = BigInt::one() << b;
    let product = q * BigInt::from(alpha.mantissa.clone());
    let center = product.mod_floor(&modulus);
    let wraps = !radius.is_zero() && {
        let r = BigInt::from(radius.clone());
        &center < &r || &center + &r >= modulus
    };
    let center = center.to_biguint().expect("mod_floor is non-negative");
    Ok(TorusInterval {
        center,
        radius,
        frac_bits: b,
        wraps,
    })
}

/// `frac(q * alpha)` on the 64-bit fast path: center and radius in units of
/// `2^-64`. `alpha_frac` is `floor(frac(alpha) * 2^64)`.
#[inline]
pub fn frac_mult_word(q: i64, alpha_frac: u64) -> (u64, u64) {
    ((q as u64).wrapping_mul(alpha_frac), q.unsigned_abs())
}

/// Smallest `B` with `q_max * 2^-B <= target_radius`.
pub fn required_bits(q_max: &BigUint, target_radius: &BigRational) -> u32 {
    assert!(target_radius.is_positive(), "target radius must be positive");
    let num = target_radius.numer().magnitude();
    let den = target_radius.denom().magnitude();
    let lhs = q_max * den;
    let mut b = lhs.bits().saturating_sub(num.bits()) as u32;
    while (num << b) < lhs {
        b += 1;
    }
    while b > 0 && (num << (b - 1)) >= lhs {
        b -= 1;
    }
    b
}

/// `units / 2^frac_bits` truncated to 53 significant bits, so a value below
/// one never rounds up to one.
pub(crate) fn dyadic_to_f64_floor(units: &BigUint, frac_bits: u32) -> f64 {
    if units.is_zero() {
        return 0.0;
    }
    let bits = units.bits();
    let (head, exp) = if bits > 53 {
        let drop = bits - 53;
        ((units >> drop).to_u64().unwrap(), drop as i64 - i64::from(frac_bits))
    } else {
        (units.to_u64().unwrap(), -i64::from(frac_bits))
    };
    (head as f64) * 2f64.powi(exp as i32)
}

/// `f64` view of a 64-bit fraction word, truncated so that it stays below one.
#[inline]
pub fn word_to_unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Repeatedly doubles the precision, starting at `start_bits`, until `eval`
/// returns `Some`, or fails past `cap`.
pub fn escalate<T>(
    start_bits: u32,
    cap: u32,
    mut eval: impl FnMut(u32) -> Result<Option<T>, PrecisionError>,
) -> Result<T, PrecisionError> {
    let mut bits = start_bits.max(1);
    loop {
        if bits > cap {
            return Err(PrecisionError::CapExceeded { cap });
        }
        match eval(bits) {
            Ok(Some(v)) => return Ok(v),
            Ok(None) | Err(PrecisionError::Insufficient { .. }) => {}
            Err(e) => return Err(e),
        }
        if bits == cap {
            return Err(PrecisionError::CapExceeded { cap });
        }
        bits = bits.saturating_mul(2).min(cap);
    }
}
