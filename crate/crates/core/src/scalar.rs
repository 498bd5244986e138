//! Scalar abstraction shared by every solver in this crate.
//!
//! All algorithms are written once, generically over [`Scalar`], and run
//! either in `f64` or in arbitrary-precision rational arithmetic
//! ([`Rational`]). The rational instantiation is what makes the energy
//! certificate and the cycle demo exact; the float instantiation is the
//! fast path.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Div, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::NumberError;

/// Arbitrary-precision rational scalar.
pub type Rational = num_rational::BigRational;

/// Numeric field the solvers are generic over.
///
/// Implemented for `f32`, `f64` and [`Rational`]. `Zero`/`One` bring in
/// `Add` and `Mul`; the remaining ring operations are listed explicitly.
/// `Rational` is not `Copy`, so generic code clones operands.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Div<Output = Self>
    + 'static
{
    /// True when arithmetic carries no rounding error.
    const EXACT: bool;

    fn from_int(v: i64) -> Self;

    /// Exact ratio of two machine integers; `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Parses a decimal string such as `-3.5`, `1e-9` or `7/2`.
    ///
    /// For [`Rational`] the value is exact; for floats it is the nearest
    /// representable value.
    fn parse_decimal(text: &str) -> Result<Self, NumberError>;

    /// Converts the exact binary value of an `f64` (every finite `f64` is
    /// a dyadic rational).
    fn from_f64_value(v: f64) -> Result<Self, NumberError>;

    fn abs(&self) -> Self;

    /// Exact halving; the `1/2` factor of every averaging update.
    fn half(&self) -> Self;

    fn is_finite_value(&self) -> bool;

    fn to_f64_lossy(&self) -> f64;

    /// Canonical textual form. Floats print their shortest round-trip
    /// representation; rationals print a finite decimal expansion when one
    /// exists (denominator 2^a·5^b) and `p/q` otherwise.
    fn decimal_string(&self) -> String;

    /// Natural logarithm where the type supports it (float modes only).
    fn try_ln(&self) -> Option<Self>;
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_int(v: i64) -> Self {
                v as $t
            }

            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn parse_decimal(text: &str) -> Result<Self, NumberError> {
                let t = text.trim();
                if let Some((num, den)) = t.split_once('/') {
                    let n: $t = num
                        .trim()
                        .parse()
                        .map_err(|_| NumberError::Syntax(text.to_string()))?;
                    let d: $t = den
                        .trim()
                        .parse()
                        .map_err(|_| NumberError::Syntax(text.to_string()))?;
                    if d == 0.0 {
                        return Err(NumberError::ZeroDenominator(text.to_string()));
                    }
                    return Ok(n / d);
                }
                let v: $t = t
                    .parse()
                    .map_err(|_| NumberError::Syntax(text.to_string()))?;
                if !v.is_finite() {
                    return Err(NumberError::NotFinite(text.to_string()));
                }
                Ok(v)
            }

            fn from_f64_value(v: f64) -> Result<Self, NumberError> {
                if !v.is_finite() {
                    return Err(NumberError::NotFinite(v.to_string()));
                }
                Ok(v as $t)
            }

            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }

            fn half(&self) -> Self {
                self * 0.5
            }

            fn is_finite_value(&self) -> bool {
                self.is_finite()
            }

            fn to_f64_lossy(&self) -> f64 {
                *self as f64
            }

            fn decimal_string(&self) -> String {
                format!("{}", self)
            }

            fn try_ln(&self) -> Option<Self> {
                if *self > 0.0 {
                    Some(self.ln())
                } else {
                    None
                }
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_int(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn parse_decimal(text: &str) -> Result<Self, NumberError> {
        parse_rational(text)
    }

    fn from_f64_value(v: f64) -> Result<Self, NumberError> {
        Rational::from_float(v).ok_or_else(|| NumberError::NotFinite(v.to_string()))
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn half(&self) -> Self {
        self / Rational::from_integer(BigInt::from(2))
    }

    fn is_finite_value(&self) -> bool {
        true
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or_else(|| {
            // Magnitudes beyond f64 range still need a usable approximation.
            let digits = self.numer().bits() as i64 - self.denom().bits() as i64;
            if self.is_negative() {
                -f64::MAX.min(2f64.powi(digits.clamp(-1074, 1023) as i32))
            } else {
                f64::MAX.min(2f64.powi(digits.clamp(-1074, 1023) as i32))
            }
        })
    }

    fn decimal_string(&self) -> String {
        rational_decimal_string(self)
    }

    fn try_ln(&self) -> Option<Self> {
        None
    }
}

/// Parses `[+-]?digits[.digits][(e|E)[+-]?digits]` or `p/q` into an exact
/// rational.
fn parse_rational(text: &str) -> Result<Rational, NumberError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(NumberError::Syntax(text.to_string()));
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| NumberError::Syntax(text.to_string()))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| NumberError::Syntax(text.to_string()))?;
        if d.is_zero() {
            return Err(NumberError::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(n, d));
    }

    let bad = || NumberError::Syntax(text.to_string());
    let (mantissa, exp_part) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], Some(&t[pos + 1..])),
        None => (t, None),
    };
    let exp: i64 = match exp_part {
        Some(e) if !e.is_empty() => e.parse().map_err(|_| bad())?,
        Some(_) => return Err(bad()),
        None => 0,
    };

    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }

    let mut mantissa_int: BigInt = if int_part.is_empty() {
        BigInt::zero()
    } else {
        int_part.parse().map_err(|_| bad())?
    };
    let ten = BigInt::from(10);
    for b in frac_part.bytes() {
        mantissa_int = &mantissa_int * &ten + BigInt::from(b - b'0');
    }
    let scale = frac_part.len() as i64 - exp;
    let value = if scale >= 0 {
        Rational::new(mantissa_int, ten.pow(scale as u32))
    } else {
        Rational::from_integer(mantissa_int * ten.pow((-scale) as u32))
    };
    Ok(if sign < 0 { -value } else { value })
}

/// Finite decimal expansion when the reduced denominator is 2^a·5^b,
/// otherwise `p/q`.
fn rational_decimal_string(r: &Rational) -> String {
    if r.denom().is_one() {
        return r.numer().to_string();
    }
    let mut den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let digits = twos.max(fives);
    let scaled = r.numer() * two.pow(digits - twos) * five.pow(digits - fives);
    let negative = scaled.is_negative();
    let abs = scaled.magnitude().to_string();
    let (int_str, frac_str) = if abs.len() > digits as usize {
        let split = abs.len() - digits as usize;
        (abs[..split].to_string(), abs[split..].to_string())
    } else {
        (
            "0".to_string(),
            format!("{:0>width$}", abs, width = digits as usize),
        )
    };
    let frac_trimmed = frac_str.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    if frac_trimmed.is_empty() {
        format!("{}{}", sign, int_str)
    } else {
        format!("{}{}.{}", sign, int_str, frac_trimmed)
    }
}

/// Total order on finite scalars; panics on incomparable values (NaN),
/// which validated inputs never produce.
pub fn cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).expect("non-finite value in comparison")
}

pub fn max_of<T: Scalar>(a: T, b: T) -> T {
    if cmp(&a, &b) == Ordering::Less {
        b
    } else {
        a
    }
}

pub fn min_of<T: Scalar>(a: T, b: T) -> T {
    if cmp(&a, &b) == Ordering::Greater {
        b
    } else {
        a
    }
}

/// Maximum of a nonempty iterator.
pub fn max_iter<T: Scalar>(iter: impl IntoIterator<Item = T>) -> Option<T> {
    iter.into_iter().reduce(max_of)
}

/// Minimum of a nonempty iterator.
pub fn min_iter<T: Scalar>(iter: impl IntoIterator<Item = T>) -> Option<T> {
    iter.into_iter().reduce(min_of)
}

/// `base^exp` by repeated multiplication (exact for rationals).
pub fn power<T: Scalar>(base: &T, exp: usize) -> T {
    let mut acc = T::one();
    for _ in 0..exp {
        acc = acc * base.clone();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_decimals() {
        let r = Rational::parse_decimal("-3.5").unwrap();
        assert_eq!(r, Rational::from_ratio(-7, 2));
        assert_eq!(Rational::parse_decimal("4").unwrap(), Rational::from_int(4));
        assert_eq!(
            Rational::parse_decimal("0.25").unwrap(),
            Rational::from_ratio(1, 4)
        );
    }

    #[test]
    fn parses_scientific_notation() {
        assert_eq!(
            Rational::parse_decimal("1e-9").unwrap(),
            Rational::from_ratio(1, 1_000_000_000)
        );
        assert_eq!(
            Rational::parse_decimal("2.5e2").unwrap(),
            Rational::from_int(250)
        );
        assert_eq!(f64::parse_decimal("1e-9").unwrap(), 1e-9);
    }

    #[test]
    fn parses_fraction_form() {
        assert_eq!(
            Rational::parse_decimal("7/2").unwrap(),
            Rational::from_ratio(7, 2)
        );
        assert!(Rational::parse_decimal("1/0").is_err());
        assert_eq!(f64::parse_decimal("7/2").unwrap(), 3.5);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Rational::parse_decimal("").is_err());
        assert!(Rational::parse_decimal("abc").is_err());
        assert!(Rational::parse_decimal("1.2.3").is_err());
        assert!(f64::parse_decimal("inf").is_err());
    }

    #[test]
    fn decimal_strings_round_trip() {
        let cases = ["-1.5", "0.25", "42", "-0.0625", "3.1415"];
        for c in &cases {
            let r = Rational::parse_decimal(c).unwrap();
            assert_eq!(r.decimal_string(), *c);
        }
        let third = Rational::from_ratio(1, 3);
        assert_eq!(third.decimal_string(), "1/3");
        assert_eq!(
            Rational::parse_decimal("1/3").unwrap(),
            Rational::from_ratio(1, 3)
        );
    }

    #[test]
    fn float_decimal_string_round_trips() {
        for v in [0.1_f64, -2.5, 1e-9, 12345.6789] {
            let s = v.decimal_string();
            assert_eq!(f64::parse_decimal(&s).unwrap(), v);
        }
    }

    #[test]
    fn half_is_exact() {
        assert_eq!(
            Rational::from_int(3).half(),
            Rational::from_ratio(3, 2)
        );
        assert_eq!(1.0_f64.half(), 0.5);
    }
}
