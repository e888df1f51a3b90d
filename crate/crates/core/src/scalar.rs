//! Scalar abstraction shared by polynomials, intervals and geometry.
//!
//! Everything that must be certified runs on [`Rational`]; the same code
//! paths also accept `f32`/`f64` for quick numerical experiments.

use std::fmt::Debug;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Exact rational number in lowest terms with positive denominator.
pub type Rational = BigRational;

/// Field-like scalar usable as a polynomial coefficient or coordinate.
pub trait Scalar:
    Clone + Debug + PartialEq + PartialOrd + Num + Signed + FromPrimitive + Send + Sync + 'static
{
    /// `true` when arithmetic on this type never rounds.
    const EXACT: bool;

    fn to_f64_lossy(&self) -> f64;

    fn from_f64_lossy(x: f64) -> Self;

    fn from_rational(q: &Rational) -> Self;

    /// Floor, saturating at the `i64` range.
    fn floor_i64(&self) -> i64;

    /// Natural log of the absolute value, finite for huge or tiny rationals.
    fn ln_lossy(&self) -> f64 {
        self.to_f64_lossy().abs().ln()
    }

    fn from_int(v: i64) -> Self {
        <Self as FromPrimitive>::from_i64(v).expect("i64 is representable in every scalar")
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn to_f64_lossy(&self) -> f64 {
        rational_to_f64(self)
    }

    fn from_f64_lossy(x: f64) -> Self {
        Rational::from_float(x).unwrap_or_else(Rational::zero)
    }

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn floor_i64(&self) -> i64 {
        let f = self.floor().to_integer();
        f.to_i64().unwrap_or(if f.is_negative() { i64::MIN } else { i64::MAX })
    }

    fn ln_lossy(&self) -> f64 {
        ln_abs(self)
    }
}

macro_rules! impl_float_scalar {
    ($f:ty) => {
        impl Scalar for $f {
            const EXACT: bool = false;

            fn to_f64_lossy(&self) -> f64 {
                *self as f64
            }

            fn from_f64_lossy(x: f64) -> Self {
                x as $f
            }

            fn from_rational(q: &Rational) -> Self {
                rational_to_f64(q) as $f
            }

            fn floor_i64(&self) -> i64 {
                self.floor() as i64
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

/// Nearest-ish `f64` of a rational, robust for numerators and denominators
/// far outside the `f64` range.
pub fn rational_to_f64(q: &Rational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() && (v != 0.0 || q.is_zero()) {
            return v;
        }
    }
    let sign = if q.is_negative() { -1.0 } else { 1.0 };
    (sign * ln_abs(q).exp()).clamp(f64::MIN, f64::MAX)
}

/// Natural logarithm of `|q|` for a nonzero rational, accurate to a few ulps
/// even when `q` does not fit in an `f64`.
pub fn ln_abs(q: &Rational) -> f64 {
    assert!(!q.is_zero(), "logarithm of zero");
    ln_bigint(q.numer()) - ln_bigint(q.denom())
}

fn ln_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.abs().to_f64().expect("fits").ln();
    }
    let shift = bits - 64;
    let top = (v.abs() >> shift).to_f64().expect("64 bits fit");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Distance from `x` to the nearest integer, exact.
pub fn dist_to_nearest_integer(x: &Rational) -> Rational {
    let frac = x - x.floor();
    let other = Rational::one() - &frac;
    if frac < other {
        frac
    } else {
        other
    }
}

/// Least common multiple of the denominators of `values` (1 for an empty list).
pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

/// Exact square root of a nonnegative rational when it is rational.
pub fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// Rational approximation of `x` by continued fractions with denominator at
/// most `max_denom`.
pub fn approximate_f64(x: f64, max_denom: u64) -> Rational {
    assert!(x.is_finite(), "cannot approximate a non-finite value");
    let exact = Rational::from_float(x).expect("finite");
    let limit = BigInt::from(max_denom);
    if exact.denom() <= &limit {
        return exact;
    }
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut rest = exact.clone();
    loop {
        let a = rest.floor().to_integer();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if q2 > limit {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = &rest - Rational::from_integer(a);
        if frac.is_zero() {
            break;
        }
        rest = frac.recip();
    }
    Rational::new(p1, q1)
}

pub fn is_integer(q: &Rational) -> bool {
    q.denom().is_one()
}

pub fn sign_of(q: &Rational) -> Sign {
    q.numer().sign()
}

/// Formats a rational as `p/q`, always including the denominator.
pub fn fmt_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `p/q` or a bare integer `p`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str_radix(p.trim(), 10).ok()?;
            let q = BigInt::from_str_radix(q.trim(), 10).ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p, q))
        }
        None => BigInt::from_str_radix(text, 10).ok().map(Rational::from_integer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_of_huge_rational_matches_shifted_value() {
        let big = Rational::from_integer(BigInt::from(10).pow(400));
        let expected = 400.0 * 10f64.ln();
        assert!((ln_abs(&big) - expected).abs() < 1e-9);
        assert!((ln_abs(&big.recip()) + expected).abs() < 1e-9);
    }

    #[test]
    fn nearest_integer_distance() {
        assert_eq!(dist_to_nearest_integer(&ratio(7, 2)), ratio(1, 2));
        assert_eq!(dist_to_nearest_integer(&ratio(18, 5)), ratio(2, 5));
        assert_eq!(dist_to_nearest_integer(&ratio(-1, 4)), ratio(1, 4));
        assert_eq!(dist_to_nearest_integer(&int(3)), int(0));
    }

    #[test]
    fn rational_text_round_trip() {
        for s in ["3/1", "-7/12", "0/1"] {
            assert_eq!(fmt_rational(&parse_rational(s).unwrap()), s);
        }
        assert_eq!(parse_rational("5"), Some(int(5)));
        assert_eq!(parse_rational("4/6"), Some(ratio(2, 3)));
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn continued_fraction_respects_bound() {
        let q = approximate_f64(std::f64::consts::PI, 1000);
        assert_eq!(q, ratio(355, 113));
        let half = approximate_f64(0.5, 10);
        assert_eq!(half, ratio(1, 2));
    }

    #[test]
    fn square_roots() {
        assert_eq!(rational_sqrt(&ratio(9, 16)), Some(ratio(3, 4)));
        assert_eq!(rational_sqrt(&int(2)), None);
    }
}
