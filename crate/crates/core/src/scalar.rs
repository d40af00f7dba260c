use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Arbitrary precision rational used by the exact paths.
pub type Rational = BigRational;

/// Ordered field the solvers run over.
///
/// Floating types compare against tolerances, exact types compare against zero.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    const EXACT: bool;

    /// Smallest tolerance the type can honour; requested tolerances are clamped up to it.
    const TOL_FLOOR: f64;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Converts through the shortest decimal form, so `0.1` becomes `1/10` in exact types.
    fn from_decimal(x: f64) -> Self;

    fn to_rational(&self) -> Rational;

    fn from_rational(r: &Rational) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn tol(eps: f64) -> Self {
        if Self::EXACT {
            Self::zero()
        } else {
            Self::from_f64(eps.max(Self::TOL_FLOOR)).unwrap_or_else(Self::zero)
        }
    }

    fn approx_eq(&self, other: &Self, eps: f64) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tol(eps)
    }

    fn is_pos(&self, eps: f64) -> bool {
        *self > Self::tol(eps)
    }

    fn is_neg(&self, eps: f64) -> bool {
        *self < -Self::tol(eps)
    }

    fn near_zero(&self, eps: f64) -> bool {
        self.abs() <= Self::tol(eps)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const TOL_FLOOR: f64 = 0.0;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_decimal(x: f64) -> Self {
        x
    }

    fn to_rational(&self) -> Rational {
        Rational::from_decimal(*self)
    }

    fn from_rational(r: &Rational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;
    const TOL_FLOOR: f64 = 1e-5;

    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn from_decimal(x: f64) -> Self {
        x as f32
    }

    fn to_rational(&self) -> Rational {
        Rational::from_decimal(*self as f64)
    }

    fn from_rational(r: &Rational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    const TOL_FLOOR: f64 = 0.0;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_decimal(x: f64) -> Self {
        parse_decimal(&format!("{x:e}")).unwrap_or_else(|| BigRational::from_f64(x).unwrap_or_else(BigRational::zero))
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

/// Parses `[-]d[.ddd][e[-]k]` into an exact rational.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = digits.parse().ok()?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Converts between scalar types; floats go through their shortest decimal form.
pub fn cast<T: Scalar, U: Scalar>(x: &T) -> U {
    U::from_rational(&x.to_rational())
}

pub fn cast_vec<T: Scalar, U: Scalar>(v: &[T]) -> Vec<U> {
    v.iter().map(cast).collect()
}

pub fn to_f64_vec<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn sum<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc + x.clone())
}

pub fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| T::max_of(acc, (x.clone() - y.clone()).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parse_is_exact() {
        assert_eq!(parse_decimal("0.1").unwrap(), Rational::from_ratio(1, 10));
        assert_eq!(parse_decimal("-2.5e-1").unwrap(), Rational::from_ratio(-1, 4));
        assert_eq!(parse_decimal("3e2").unwrap(), Rational::from_ratio(300, 1));
        assert_eq!(Rational::from_decimal(0.3), Rational::from_ratio(3, 10));
        assert!(parse_decimal("").is_none());
    }

    #[test]
    fn tolerances_vanish_in_exact_mode() {
        assert!(Rational::tol(1e-3).is_zero());
        assert_eq!(f64::tol(1e-3), 1e-3);
        assert!(f32::tol(1e-12) >= 1e-5);
        assert!(!Rational::from_ratio(1, 1_000_000_000).near_zero(1e-3));
        assert!(1e-12f64.near_zero(1e-9));
    }
}
