//! Closed intervals and range bounds of polynomials over boxes.
//!
//! With an exact scalar the enclosure is certified. Float intervals are not
//! outward rounded and only serve as estimates.

use std::ops::{Add, Mul, Neg, Sub};

use crate::poly::{Poly, PolyError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        assert!(lo <= hi, "empty interval");
        Interval { lo, hi }
    }

    pub fn point(x: T) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn centered(center: &T, radius: &T) -> Self {
        Interval::new(center.clone() - radius.clone(), center.clone() + radius.clone())
    }

    pub fn contains(&self, x: &T) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&T::zero())
    }

    pub fn width(&self) -> T {
        self.hi.clone() - self.lo.clone()
    }

    pub fn mag(&self) -> T {
        let a = self.lo.abs();
        let b = self.hi.abs();
        if a > b {
            a
        } else {
            b
        }
    }

    pub fn hull(&self, other: &Self) -> Self {
        Interval {
            lo: min(&self.lo, &other.lo),
            hi: max(&self.hi, &other.hi),
        }
    }

    /// Tight enclosure of `x^e`, respecting even powers.
    pub fn powi(&self, e: u32) -> Self {
        if e == 0 {
            return Interval::point(T::one());
        }
        let pl = pow(&self.lo, e);
        let ph = pow(&self.hi, e);
        if e % 2 == 1 {
            Interval { lo: pl, hi: ph }
        } else if self.contains_zero() {
            Interval {
                lo: T::zero(),
                hi: max(&pl, &ph),
            }
        } else {
            Interval {
                lo: min(&pl, &ph),
                hi: max(&pl, &ph),
            }
        }
    }
}

fn pow<T: Scalar>(x: &T, e: u32) -> T {
    (0..e).fold(T::one(), |acc, _| acc * x.clone())
}

fn min<T: Scalar>(a: &T, b: &T) -> T {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

fn max<T: Scalar>(a: &T, b: &T) -> T {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

impl<T: Scalar> Add for &Interval<T> {
    type Output = Interval<T>;
    fn add(self, rhs: &Interval<T>) -> Interval<T> {
        Interval {
            lo: self.lo.clone() + rhs.lo.clone(),
            hi: self.hi.clone() + rhs.hi.clone(),
        }
    }
}

impl<T: Scalar> Sub for &Interval<T> {
    type Output = Interval<T>;
    fn sub(self, rhs: &Interval<T>) -> Interval<T> {
        Interval {
            lo: self.lo.clone() - rhs.hi.clone(),
            hi: self.hi.clone() - rhs.lo.clone(),
        }
    }
}

impl<T: Scalar> Neg for &Interval<T> {
    type Output = Interval<T>;
    fn neg(self) -> Interval<T> {
        Interval {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }
}

impl<T: Scalar> Mul for &Interval<T> {
    type Output = Interval<T>;
    fn mul(self, rhs: &Interval<T>) -> Interval<T> {
        let cands = [
            self.lo.clone() * rhs.lo.clone(),
            self.lo.clone() * rhs.hi.clone(),
            self.hi.clone() * rhs.lo.clone(),
            self.hi.clone() * rhs.hi.clone(),
        ];
        let lo = cands.iter().skip(1).fold(cands[0].clone(), |a, b| min(&a, b));
        let hi = cands.iter().skip(1).fold(cands[0].clone(), |a, b| max(&a, b));
        Interval { lo, hi }
    }
}

impl<T: Scalar> Poly<T> {
    /// Natural interval extension evaluated term by term.
    pub fn eval_interval(&self, domain: &[Interval<T>]) -> Result<Interval<T>, PolyError> {
        if domain.len() != self.num_vars() {
            return Err(PolyError::DimensionMismatch {
                expected: self.num_vars(),
                got: domain.len(),
            });
        }
        let mut acc = Interval::point(T::zero());
        for (m, c) in self.terms() {
            let mut term = Interval::point(c.clone());
            for (iv, &e) in domain.iter().zip(m.exponents()) {
                if e > 0 {
                    term = &term * &iv.powi(e);
                }
            }
            acc = &acc + &term;
        }
        Ok(acc)
    }
}
