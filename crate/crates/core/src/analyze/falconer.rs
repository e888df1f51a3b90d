//! Interval coverings behind the null angle set: the sets `A_i` of reals
//! close to `N_i^-1 Z`, their cubes `B_i`, and the cosine coverings `C_i`.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analyze::angles::cmp_cos_value;
use crate::geom::{dot, fmt_point, norm2, sub, Point};
use crate::scalar::{fmt_rational, int, rational_to_f64, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCovering {
    /// Disjoint, sorted, closed.
    pub intervals: Vec<(Rational, Rational)>,
    /// Pieces the covering is built from before clipping and merging.
    pub nominal_count: BigInt,
    pub piece_length: Rational,
    pub pre_merge_length: Rational,
    pub total_length: Rational,
}

impl IntervalCovering {
    fn from_pieces(mut raw: Vec<(Rational, Rational)>, nominal_count: BigInt, piece_length: Rational) -> Self {
        raw.sort();
        let mut merged: Vec<(Rational, Rational)> = Vec::new();
        for (lo, hi) in raw {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => merged.push((lo, hi)),
            }
        }
        let total_length = merged.iter().map(|(a, b)| b - a).sum();
        IntervalCovering {
            pre_merge_length: Rational::from_integer(nominal_count.clone()) * &piece_length,
            intervals: merged,
            nominal_count,
            piece_length,
            total_length,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.locate(|t| t.cmp(x))
    }

    /// Membership of `dot / sqrt(prod)`, decided exactly.
    pub fn contains_cos(&self, dot: &Rational, prod: &Rational) -> bool {
        self.locate(|t| cmp_cos_value(dot, prod, t).reverse())
    }

    /// `cmp(t)` orders an endpoint `t` against the query point.
    fn locate(&self, cmp: impl Fn(&Rational) -> Ordering) -> bool {
        let k = self.intervals.partition_point(|(lo, _)| cmp(lo) != Ordering::Greater);
        k > 0 && cmp(&self.intervals[k - 1].1) != Ordering::Less
    }

    pub fn intersect(&self, other: &IntervalCovering) -> Vec<(Rational, Rational)> {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a0, a1) = &self.intervals[i];
            let (b0, b1) = &other.intervals[j];
            let lo = if a0 > b0 { a0 } else { b0 };
            let hi = if a1 < b1 { a1 } else { b1 };
            if lo <= hi {
                out.push((lo.clone(), hi.clone()));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        out
    }

    pub fn to_doc(&self) -> CoveringDoc {
        CoveringDoc {
            intervals: self
                .intervals
                .iter()
                .map(|(a, b)| [fmt_rational(a), fmt_rational(b)])
                .collect(),
            nominal_count: self.nominal_count.to_string(),
            piece_length: fmt_rational(&self.piece_length),
            pre_merge_length: fmt_rational(&self.pre_merge_length),
            total_length: fmt_rational(&self.total_length),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringDoc {
    pub intervals: Vec<[String; 2]>,
    pub nominal_count: String,
    pub piece_length: String,
    pub pre_merge_length: String,
    pub total_length: String,
}

fn pow(base: u64, e: u32) -> Rational {
    Rational::from_integer(BigInt::from(base).pow(e))
}

/// Half-width of the pieces of `A_i`: `||x N|| <= N^-6 / i^4` means
/// `|x - j/N| <= N^-7 / i^4`.
pub fn a_half_width(n_i: u64, i: u64) -> Rational {
    (pow(n_i, 7) * pow(i, 4)).recip()
}

/// `{x in [0,1] : ||x N|| <= N^-6 / i^4}`.
pub fn falconer_a(n_i: u64, i: u64) -> IntervalCovering {
    assert!(n_i >= 2 && i >= 1);
    let delta = a_half_width(n_i, i);
    let one = Rational::one();
    let zero = Rational::zero();
    let raw = (0..=n_i)
        .map(|j| {
            let c = Rational::new(j.into(), n_i.into());
            let lo = &c - &delta;
            let hi = &c + &delta;
            (
                if lo < zero { zero.clone() } else { lo },
                if hi > one { one.clone() } else { hi },
            )
        })
        .collect();
    IntervalCovering::from_pieces(raw, BigInt::from(n_i + 1), &delta * int(2))
}

/// `162 n^5 / i^2`.
pub fn c_cover_bound(n: u64, i: u64) -> Rational {
    Rational::new(BigInt::from(162) * BigInt::from(n).pow(5), BigInt::from(i * i))
}

/// Covering of the cosines of angles in `B_i` whose sides have squared
/// length at least `1/i`.
///
/// Nominally `(3 N^2 n)^3` pieces of length `3 n i^2 (2 n N^-6 / i^4)`. The
/// pieces actually placed are centred at `j1 / sqrt(j2 j3)`, with `j1/N^2`
/// the nearby inner product and `j2/N^2, j3/N^2` the squared side lengths,
/// restricted to centres that can occur; each centre is rounded to a dyadic
/// rational and the pieces are clipped to `[-1, 1]`.
pub fn falconer_c_cover(n_i: u64, i: u64, n: u64) -> IntervalCovering {
    assert!(n_i >= 2 && n >= 2 && i >= 1);
    let nn = n_i * n_i;
    let eta = Rational::from_integer(n.into()) / (pow(n_i, 6) * pow(i, 4));
    let piece = Rational::from_integer((3 * n * i * i).into()) * int(2) * &eta;
    let nominal = BigInt::from(3 * nn * n).pow(3);
    let half = &piece / int(2);
    let top = (n * nn) as i64;
    let floor_side = Rational::new(BigInt::one(), BigInt::from(i)) - &eta;
    let j_lo = (floor_side * Rational::from_integer(nn.into()))
        .ceil()
        .to_integer()
        .max(BigInt::one());
    let j_lo: i64 = j_lo.try_into().unwrap_or(i64::MAX);
    let mut products = BTreeSet::new();
    for a in j_lo..=top {
        for b in a..=top {
            products.insert(a * b);
        }
    }
    let (lo_bound, hi_bound) = (int(-1), int(1));
    let mut raw = Vec::new();
    for j1 in -top..=top {
        for &p in &products {
            let c = j1 as f64 / (p as f64).sqrt();
            let c = Rational::from_float(c).expect("finite");
            let lo = &c - &half;
            let hi = &c + &half;
            if hi < lo_bound || lo > hi_bound {
                continue;
            }
            raw.push((
                if lo < lo_bound { lo_bound.clone() } else { lo },
                if hi > hi_bound { hi_bound.clone() } else { hi },
            ));
        }
    }
    let cover = IntervalCovering::from_pieces(raw, nominal, piece);
    assert_eq!(cover.pre_merge_length, c_cover_bound(n, i));
    cover
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Escape {
    pub level: u64,
    pub triple: Vec<Vec<String>>,
    pub cos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalconerReport {
    pub status: String,
    pub n: u64,
    pub scales: Vec<u64>,
    pub i_max: u64,
    pub seed: u64,
    pub samples: usize,
    /// Intervals of the truncated intersection of the `A_i`.
    pub a_intervals: usize,
    pub degenerate: usize,
    pub checked: usize,
    pub exempt: usize,
    pub escapes: Vec<Escape>,
    pub cover_lengths: Vec<String>,
}

impl FalconerReport {
    pub fn passed(&self) -> bool {
        self.escapes.is_empty()
    }
}

fn primes(k: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(k);
    let mut c = 2u64;
    while out.len() < k {
        if out.iter().all(|p| !c.is_multiple_of(*p)) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Samples triples `(a, b, c)` of `B = A^n`, `A` the intersection of the
/// `A_i` for `i <= i_max`, and checks the cosine of the angle at `b` against
/// the covering `C_i` for each level where both sides are long enough.
///
/// Sampling walks a Kronecker sequence over (interval index, position) for
/// each of the `3n` coordinates, with seeded offsets.
pub fn falconer_angle_check(scales: &[u64], i_max: u64, n: u64, samples: usize, seed: u64) -> FalconerReport {
    assert!(scales.len() as u64 >= i_max && i_max >= 1);
    let mut a_set = falconer_a(scales[0], 1).intervals;
    for i in 2..=i_max {
        let next = falconer_a(scales[i as usize - 1], i);
        let cur = IntervalCovering::from_pieces(a_set, BigInt::zero(), Rational::zero());
        a_set = cur.intersect(&next);
    }
    let covers: Vec<IntervalCovering> = (1..=i_max)
        .map(|i| falconer_c_cover(scales[i as usize - 1], i, n))
        .collect();
    check_on(&a_set, &covers, scales, n, samples, seed)
}

fn check_on(
    a_set: &[(Rational, Rational)],
    covers: &[IntervalCovering],
    scales: &[u64],
    n: u64,
    samples: usize,
    seed: u64,
) -> FalconerReport {
    let i_max = covers.len() as u64;
    let mut report = FalconerReport {
        status: "ok".into(),
        n,
        scales: scales[..i_max as usize].to_vec(),
        i_max,
        seed,
        samples,
        a_intervals: a_set.len(),
        degenerate: 0,
        checked: 0,
        exempt: 0,
        escapes: Vec::new(),
        cover_lengths: covers.iter().map(|c| fmt_rational(&c.total_length)).collect(),
    };
    if a_set.is_empty() {
        report.status = "empty approximation".into();
        return report;
    }
    let dims = 3 * n as usize;
    let alphas: Vec<f64> = primes(dims).iter().map(|&p| (p as f64).sqrt().fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets: Vec<f64> = (0..dims).map(|_| rng.gen_range(0.0..1.0)).collect();
    let m = a_set.len() as f64;
    let res = 1u64 << 20;
    for t in 0..samples {
        let coords: Vec<Rational> = (0..dims)
            .map(|s| {
                let u = (offsets[s] + (t as f64 + 1.0) * alphas[s]).fract() * m;
                let k = (u.floor() as usize).min(a_set.len() - 1);
                let v = ((u.fract() * res as f64).round() as u64).min(res);
                let (lo, hi) = &a_set[k];
                lo + (hi - lo) * Rational::new(v.into(), res.into())
            })
            .collect();
        let pts: Vec<Point> = coords.chunks(n as usize).map(|c| c.to_vec()).collect();
        let (a, b, c) = (&pts[0], &pts[1], &pts[2]);
        if a == b || c == b {
            report.degenerate += 1;
            continue;
        }
        let u = sub(a, b);
        let v = sub(c, b);
        let d = dot(&u, &v);
        let (l1, l2) = (norm2(&u), norm2(&v));
        let prod = &l1 * &l2;
        for (i, cover) in (1..=i_max).zip(covers) {
            let floor = Rational::new(BigInt::one(), BigInt::from(i));
            if l1 < floor || l2 < floor {
                report.exempt += 1;
                continue;
            }
            report.checked += 1;
            if !cover.contains_cos(&d, &prod) {
                report.escapes.push(Escape {
                    level: i,
                    triple: pts.iter().map(|p| fmt_point(p)).collect(),
                    cos: rational_to_f64(&d) / rational_to_f64(&prod).sqrt(),
                });
            }
        }
    }
    report
}
