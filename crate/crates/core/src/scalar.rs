//! Scalar abstraction shared by the symbolic pipeline.
//!
//! Everything from Hall bases to privileged charts is generic over
//! [`Scalar`]. The exact instance is [`BigRational`]; `f64` and `f32` give
//! fast approximate charts for the planner.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Field of coefficients used by polynomials, charts and linear algebra.
pub trait Scalar:
    Clone + Debug + Display + PartialEq + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static
{
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    /// Conversion from a double. Rationals receive the exact dyadic value.
    fn from_f64(v: f64) -> Self;

    fn from_rational(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    /// Exact rational value (dyadic for floating types).
    fn to_rational(&self) -> BigRational;

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Relative tolerance below which a value counts as zero. Exact types use 0.
    fn tolerance() -> f64;

    /// Whether `self` is zero relative to `scale`.
    fn is_negligible(&self, scale: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.to_f64().abs() <= Self::tolerance() * scale.max(1.0)
        }
    }

    /// Cosine and sine. Exact types round through `f64` to dyadic rationals,
    /// except at zero where the values are exact.
    fn cos_sin(&self) -> (Self, Self) {
        if self.is_zero() {
            return (Self::one(), Self::zero());
        }
        let v = self.to_f64();
        (Self::from_f64(v.cos()), Self::from_f64(v.sin()))
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_i64(n) / Self::from_i64(d)
    }
}

macro_rules! float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_i64(v: i64) -> Self {
                v as $t
            }

            fn from_f64(v: f64) -> Self {
                v as $t
            }

            fn from_rational(r: &BigRational) -> Self {
                ToPrimitive::to_f64(r).unwrap_or(f64::NAN) as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn abs_val(&self) -> Self {
                self.abs()
            }

            fn to_rational(&self) -> BigRational {
                <BigRational as FromPrimitive>::from_f64(*self as f64).expect("finite value")
            }

            fn tolerance() -> f64 {
                $tol
            }

            fn cos_sin(&self) -> (Self, Self) {
                (self.cos(), self.sin())
            }
        }
    };
}

float_scalar!(f64, 1e-12);
float_scalar!(f32, 1e-5);

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_f64(v: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(v)
            .expect("finite value required for exact conversion")
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // Very large numerators or denominators: fall back on a scaled division.
            let n = self.numer().to_f64().unwrap_or(f64::INFINITY);
            let d = self.denom().to_f64().unwrap_or(f64::INFINITY);
            n / d
        })
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn to_rational(&self) -> BigRational {
        self.clone()
    }

    fn tolerance() -> f64 {
        0.0
    }
}

/// Parses a decimal literal such as `12`, `0.25` or `1e-3` into an exact rational.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10).ok()?;
    let shift = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if shift >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-shift) as usize))
    };
    Some(value)
}

/// Factorial as a scalar.
pub fn factorial<S: Scalar>(k: u32) -> S {
    let mut acc = S::one();
    for i in 2..=k {
        acc = acc * S::from_i64(i as i64);
    }
    acc
}
