//! Exact rational point helpers.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::scalar::{fmt_rational, parse_rational, Rational, Scalar};

/// A point of `Q^n`.
pub type Point = Vec<Rational>;

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

pub fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| {
        let d = x.clone() - y.clone();
        acc + d.clone() * d
    })
}

/// Concatenates points into the flat variable vector of a configuration.
pub fn flatten<T: Clone>(points: &[Vec<T>]) -> Vec<T> {
    points.iter().flat_map(|p| p.iter().cloned()).collect()
}

pub fn to_f64(p: &[Rational]) -> Vec<f64> {
    p.iter().map(Scalar::to_f64_lossy).collect()
}

pub fn fmt_point(p: &[Rational]) -> Vec<String> {
    p.iter().map(fmt_rational).collect()
}

pub fn parse_point(items: &[String]) -> Option<Point> {
    items.iter().map(|s| parse_rational(s)).collect()
}

/// Closed axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lo: Point,
    pub hi: Point,
}

impl BoundingBox {
    pub fn new(lo: Point, hi: Point) -> Self {
        assert_eq!(lo.len(), hi.len(), "box corners differ in dimension");
        assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b), "box corners out of order");
        BoundingBox { lo, hi }
    }

    /// The cube `[center - half, center + half]^n`.
    pub fn cube(center: &[Rational], half: &Rational) -> Self {
        BoundingBox {
            lo: center.iter().map(|c| c - half).collect(),
            hi: center.iter().map(|c| c + half).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[Rational]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| a <= x && x <= b)
    }

    /// Smallest box containing every point; `None` for an empty list.
    pub fn enclosing(points: &[Point]) -> Option<Self> {
        let first = points.first()?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for p in &points[1..] {
            for (k, x) in p.iter().enumerate() {
                if x < &lo[k] {
                    lo[k] = x.clone();
                }
                if x > &hi[k] {
                    hi[k] = x.clone();
                }
            }
        }
        Some(BoundingBox { lo, hi })
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| (b - a).is_zero())
    }
}

/// Serialized form of a box with `p/q` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxDoc {
    pub lo: Vec<String>,
    pub hi: Vec<String>,
}

impl From<&BoundingBox> for BoxDoc {
    fn from(b: &BoundingBox) -> Self {
        BoxDoc {
            lo: fmt_point(&b.lo),
            hi: fmt_point(&b.hi),
        }
    }
}

impl BoxDoc {
    pub fn to_box(&self) -> Option<BoundingBox> {
        let lo = parse_point(&self.lo)?;
        let hi = parse_point(&self.hi)?;
        (lo.len() == hi.len() && lo.iter().zip(&hi).all(|(a, b)| a <= b)).then(|| BoundingBox::new(lo, hi))
    }
}
