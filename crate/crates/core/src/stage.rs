//! Shifted-lattice stages around an anchor configuration.
//!
//! Given an integer-coefficient polynomial `P` of degree `d` vanishing at an
//! anchor `(x_1, .., x_m)` with a nonzero pivot partial `a`, a stage of grid
//! `N` places the lattice `N^-1 Z^n` in each anchor ball, shifts the pivot
//! point's ball by `u = 1 / (2 N^d a)` along the pivot coordinate, and keeps
//! everything outside the anchor balls. On every tuple drawn near the balls
//! `N^d P` then stays at least `1/4` away from the integers.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{dist2, flatten, fmt_point, BoundingBox, BoxDoc, Point};
use crate::poly::{Degree, PolyError};
use crate::scalar::{dist_to_nearest_integer, fmt_rational, int, ln_abs, ratio, Rational};
use crate::RationalPoly;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StageError {
    #[error("polynomial error: {0}")]
    Poly(#[from] PolyError),
    #[error("degenerate anchor: every partial derivative vanishes there")]
    DegenerateAnchor,
    #[error("polynomial does not vanish at the anchor (value {0})")]
    NotAZero(String),
    #[error("anchor points {0} and {1} coincide")]
    RepeatedAnchorPoint(usize, usize),
    #[error("anchor points must all have dimension {0}")]
    DimensionMismatch(usize),
    #[error("polynomial must have integer coefficients; apply clear_denominators first")]
    NonIntegerCoefficients,
    #[error("polynomial must have positive degree")]
    ConstantPolynomial,
    #[error("scale h must satisfy 0 < h < 1")]
    ScaleOutOfRange,
    #[error(
        "scale too coarse: h^d/ln(1/h) exceeds c*N^-d; largest admissible h found is {admissible_h} (ln h = {ln_admissible_h:.6})"
    )]
    ScaleTooCoarse { admissible_h: String, ln_admissible_h: f64 },
    #[error("grid N = {grid} too coarse for the half-integer gap; need N >= {min_grid}")]
    GridTooCoarse { grid: u64, min_grid: u64 },
    #[error("stage would materialize more than {0} points")]
    TooManyPoints(usize),
}

const MAX_STAGE_POINTS: usize = 5_000_000;

/// Anchor configuration with its certified pivot and radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub points: Vec<Point>,
    /// Flat variable index `i * n + j`.
    pub pivot: usize,
    pub pivot_value: Rational,
    pub radius: Rational,
}

impl Anchor {
    /// Validates the anchor, then picks the pivot and radius.
    pub fn new(poly: &RationalPoly, points: Vec<Point>) -> Result<Self, StageError> {
        let n = points.first().map_or(0, Vec::len);
        if n == 0 || points.iter().any(|p| p.len() != n) || poly.num_vars() != n * points.len() {
            return Err(StageError::DimensionMismatch(n));
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(StageError::RepeatedAnchorPoint(i, j));
                }
            }
        }
        let value = poly.eval(&flatten(&points))?;
        if !value.is_zero() {
            return Err(StageError::NotAZero(fmt_rational(&value)));
        }
        let (pivot, pivot_value) = find_pivot(poly, &points)?;
        let radius = choose_radius(poly, &points, pivot, &pivot_value)?;
        Ok(Anchor {
            points,
            pivot,
            pivot_value,
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the point whose ball carries the shift.
    pub fn shifted_point(&self) -> usize {
        self.pivot / self.dim()
    }

    pub fn shifted_coord(&self) -> usize {
        self.pivot % self.dim()
    }
}

/// First variable (point-major order) with a nonzero partial at `points`.
pub fn find_pivot(poly: &RationalPoly, points: &[Point]) -> Result<(usize, Rational), StageError> {
    let flat = flatten(points);
    for v in 0..poly.num_vars() {
        let value = poly.partial(v)?.eval(&flat)?;
        if !value.is_zero() {
            return Ok((v, value));
        }
    }
    Err(StageError::DegenerateAnchor)
}

/// Halves `r` from 1 until the pivot partial provably stays within `|a|/3`
/// of `a` on the product of radius-`r` balls and `r` is at most a quarter of
/// the smallest pairwise anchor distance.
pub fn choose_radius(
    poly: &RationalPoly,
    points: &[Point],
    pivot: usize,
    a: &Rational,
) -> Result<Rational, StageError> {
    assert!(!a.is_zero(), "pivot value must be nonzero");
    let flat = flatten(points);
    let nv = poly.num_vars();
    // Taylor expansion of the pivot partial around the anchor.
    let images: Vec<RationalPoly> = flat
        .iter()
        .enumerate()
        .map(|(v, x)| RationalPoly::var(nv, v) + RationalPoly::constant(nv, x.clone()))
        .collect();
    let shifted = poly.partial(pivot)?.substitute(&images)?;
    let by_degree: Vec<(u32, Rational)> = shifted
        .terms()
        .filter(|(m, _)| !m.is_one())
        .map(|(m, c)| (m.degree(), c.abs()))
        .collect();
    let min_d2 = points
        .iter()
        .enumerate()
        .flat_map(|(i, p)| points[i + 1..].iter().map(move |q| dist2(p, q)))
        .min();
    let target = a.abs() / int(3);
    let mut r = Rational::one();
    loop {
        let variation = by_degree
            .iter()
            .fold(Rational::zero(), |acc, (deg, c)| acc + c * pow(&r, *deg));
        let cap_ok = min_d2.as_ref().is_none_or(|d2| &r * &r * int(16) <= *d2);
        if cap_ok && variation <= target {
            return Ok(r);
        }
        r /= int(2);
    }
}

fn pow(x: &Rational, e: u32) -> Rational {
    (0..e).fold(Rational::one(), |acc, _| acc * x)
}

/// Smallest `N` with `sqrt(n) / N <= h`, exactly.
pub fn grid_for_scale(n: usize, h: &Rational) -> BigInt {
    assert!(h.is_positive());
    let target = (int(n as i64) / (h * h)).ceil().to_integer();
    let root = target.sqrt();
    if &root * &root < target {
        root + 1
    } else {
        root
    }
}

/// How `build_stage` treats the thickness relation `h^d/ln(1/h) <= c N^-d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThicknessPolicy {
    /// Violations are errors.
    Require,
    /// Evaluate and record the relation; only the gap certificate is enforced.
    Record,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeStage {
    pub poly: RationalPoly,
    pub anchor: Anchor,
    pub n: usize,
    pub degree: u32,
    pub grid: u64,
    pub h: Option<Rational>,
    /// Shift vector applied to the pivot point's ball.
    pub shift: Point,
    pub bounding_box: BoundingBox,
    /// C'': sum over variables of a bound on `|dP/dv|` on the anchor region.
    pub lip_bound: Rational,
    /// C': half a bound on the second pivot derivative.
    pub second_bound: Rational,
    pub safe_c: Rational,
    pub thickness_certified: Option<bool>,
}

/// Lattice points of each anchor ball that fall inside the bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePointSet {
    pub balls: Vec<Vec<Point>>,
}

impl StagePointSet {
    pub fn len(&self) -> usize {
        self.balls.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all_points(&self) -> Vec<Point> {
        self.balls.iter().flatten().cloned().collect()
    }

    /// CSV with header `ball_index,coord_0,..`; coordinates as `p/q`.
    pub fn to_csv(&self, n: usize) -> String {
        let mut out = String::from("ball_index");
        for k in 0..n {
            out.push_str(&format!(",coord_{k}"));
        }
        out.push('\n');
        for (i, ball) in self.balls.iter().enumerate() {
            for p in ball {
                out.push_str(&i.to_string());
                for c in fmt_point(p) {
                    out.push(',');
                    out.push_str(&c);
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMetadata {
    pub n: usize,
    pub m: usize,
    pub grid: u64,
    pub degree: u32,
    pub h: Option<String>,
    pub pivot: usize,
    pub pivot_value: String,
    pub shift: Vec<String>,
    pub radius: String,
    pub safe_c: String,
    pub lip_bound: String,
    pub second_bound: String,
    pub safe_radius: String,
    pub thickness_certified: Option<bool>,
    pub bounding_box: BoxDoc,
}

struct Constants {
    lip_bound: Rational,
    second_bound: Rational,
    safe_c: Rational,
}

fn constants(poly: &RationalPoly, anchor: &Anchor, grid: u64, degree: u32) -> Constants {
    let nd = pow(&int(grid as i64), degree);
    let shift_len = (nd.clone() * int(2) * &anchor.pivot_value).recip().abs();
    let reach = &anchor.radius + &shift_len + nd.recip();
    let bounds: Vec<Rational> = flatten(&anchor.points).iter().map(|x| x.abs() + &reach).collect();
    let lip_bound = poly
        .gradient()
        .iter()
        .fold(Rational::zero(), |acc, g| acc + g.magnitude_bound(&bounds));
    let second = poly
        .partial(anchor.pivot)
        .and_then(|p| p.partial(anchor.pivot))
        .expect("pivot in range");
    let second_bound = second.magnitude_bound(&bounds) / int(2);
    let quarter = ratio(1, 4);
    let safe_c = if lip_bound.is_zero() {
        quarter
    } else {
        let c = (lip_bound.clone() * int(20)).recip();
        if c > quarter {
            quarter
        } else {
            c
        }
    };
    Constants {
        lip_bound,
        second_bound,
        safe_c,
    }
}

/// `C'/(4 N^d a^2) <= 1/30`, the condition turning the `1/6` pivot slack
/// into the `1/5` lattice gap.
fn grid_gap_ok(second_bound: &Rational, a: &Rational, grid: u64, degree: u32) -> bool {
    let nd = pow(&int(grid as i64), degree);
    second_bound * int(30) <= nd * int(4) * a * a
}

fn min_grid(second_bound: &Rational, a: &Rational, degree: u32) -> u64 {
    let mut g = 1u64;
    while !grid_gap_ok(second_bound, a, g, degree) {
        g += 1;
    }
    g
}

/// Log-space check of `h^d/ln(1/h) <= c N^-d` with a small safety margin.
fn thickness_ok(h: &Rational, degree: u32, safe_c: &Rational, grid: &BigInt) -> bool {
    let ln_h = ln_abs(h);
    let lhs = degree as f64 * ln_h - (-ln_h).ln();
    let rhs = ln_abs(safe_c) - degree as f64 * ln_abs(&Rational::from_integer(grid.clone()));
    lhs + 1e-9 <= rhs
}

/// Builds the stage for scale `h`; `N` is the smallest grid with
/// `sqrt(n)/N <= h`.
pub fn build_stage(
    poly: &RationalPoly,
    anchor: &Anchor,
    h: &Rational,
    bounding_box: &BoundingBox,
    policy: ThicknessPolicy,
) -> Result<(LatticeStage, StagePointSet), StageError> {
    if !h.is_positive() || h >= &Rational::one() {
        return Err(StageError::ScaleOutOfRange);
    }
    let degree = check_poly(poly)?;
    let grid_big = grid_for_scale(anchor.dim(), h);
    let grid = grid_big.to_u64().ok_or(StageError::TooManyPoints(MAX_STAGE_POINTS))?;
    let consts = constants(poly, anchor, grid, degree);
    let certified = thickness_ok(h, degree, &consts.safe_c, &grid_big);
    if !certified && policy == ThicknessPolicy::Require {
        return Err(scale_error(poly, anchor, h, degree));
    }
    let (mut stage, points) = assemble(poly, anchor, grid, degree, bounding_box, consts)?;
    stage.h = Some(h.clone());
    stage.thickness_certified = Some(certified);
    Ok((stage, points))
}

/// Builds the stage directly from a grid `N`, without a scale `h`.
pub fn build_stage_with_grid(
    poly: &RationalPoly,
    anchor: &Anchor,
    grid: u64,
    bounding_box: &BoundingBox,
) -> Result<(LatticeStage, StagePointSet), StageError> {
    let degree = check_poly(poly)?;
    let consts = constants(poly, anchor, grid, degree);
    assemble(poly, anchor, grid, degree, bounding_box, consts)
}

fn check_poly(poly: &RationalPoly) -> Result<u32, StageError> {
    if !poly.has_integer_coefficients() {
        return Err(StageError::NonIntegerCoefficients);
    }
    match poly.degree() {
        Degree::Finite(d) if d > 0 => Ok(d),
        _ => Err(StageError::ConstantPolynomial),
    }
}

fn scale_error(poly: &RationalPoly, anchor: &Anchor, h: &Rational, degree: u32) -> StageError {
    let mut candidate = h.clone();
    for _ in 0..4096 {
        candidate /= int(2);
        let grid = grid_for_scale(anchor.dim(), &candidate);
        let Some(g) = grid.to_u64() else { break };
        let consts = constants(poly, anchor, g, degree);
        if thickness_ok(&candidate, degree, &consts.safe_c, &grid) {
            break;
        }
    }
    StageError::ScaleTooCoarse {
        ln_admissible_h: ln_abs(&candidate),
        admissible_h: if candidate.numer().bits() + candidate.denom().bits() < 256 {
            fmt_rational(&candidate)
        } else {
            format!("{}*2^-k", fmt_rational(h))
        },
    }
}

fn assemble(
    poly: &RationalPoly,
    anchor: &Anchor,
    grid: u64,
    degree: u32,
    bounding_box: &BoundingBox,
    consts: Constants,
) -> Result<(LatticeStage, StagePointSet), StageError> {
    let stage = prepare(poly, anchor, grid, degree, bounding_box, consts)?;
    let balls = (0..anchor.len())
        .map(|i| stage.ball_points(i, &anchor.radius, Some(bounding_box)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((stage, StagePointSet { balls }))
}

fn prepare(
    poly: &RationalPoly,
    anchor: &Anchor,
    grid: u64,
    degree: u32,
    bounding_box: &BoundingBox,
    consts: Constants,
) -> Result<LatticeStage, StageError> {
    if !grid_gap_ok(&consts.second_bound, &anchor.pivot_value, grid, degree) {
        return Err(StageError::GridTooCoarse {
            grid,
            min_grid: min_grid(&consts.second_bound, &anchor.pivot_value, degree),
        });
    }
    let n = anchor.dim();
    let nd = pow(&int(grid as i64), degree);
    let mut shift = vec![Rational::zero(); n];
    shift[anchor.shifted_coord()] = (nd * int(2) * &anchor.pivot_value).recip();
    Ok(LatticeStage {
        poly: poly.clone(),
        anchor: anchor.clone(),
        n,
        degree,
        grid,
        h: None,
        shift,
        bounding_box: bounding_box.clone(),
        lip_bound: consts.lip_bound,
        second_bound: consts.second_bound,
        safe_c: consts.safe_c,
        thickness_certified: None,
    })
}

/// The stage for grid `N` without materializing any points; the bounding
/// box is the cube around the anchor balls.
pub fn stage_for_grid(poly: &RationalPoly, anchor: &Anchor, grid: u64) -> Result<LatticeStage, StageError> {
    let degree = check_poly(poly)?;
    let consts = constants(poly, anchor, grid, degree);
    let lo = (0..anchor.dim())
        .map(|k| {
            anchor
                .points
                .iter()
                .map(|p| &p[k] - &anchor.radius)
                .min()
                .expect("nonempty")
        })
        .collect();
    let hi = (0..anchor.dim())
        .map(|k| {
            anchor
                .points
                .iter()
                .map(|p| &p[k] + &anchor.radius)
                .max()
                .expect("nonempty")
        })
        .collect();
    prepare(poly, anchor, grid, degree, &BoundingBox::new(lo, hi), consts)
}

/// Outcome of the exhaustive-plus-sampled gap certification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub lattice_tuples: usize,
    pub perturbations: usize,
    pub min_lattice_margin: Option<String>,
    pub min_perturbed_margin: Option<String>,
    /// Tuples whose margin fell below the certified floor.
    pub violations: usize,
    /// Tuples on which the polynomial vanished exactly.
    pub zeros: usize,
}

impl LatticeStage {
    pub fn grid_power(&self) -> Rational {
        pow(&int(self.grid as i64), self.degree)
    }

    /// Lattice points of ball `i` (shifted for the pivot ball) strictly
    /// within `radius` of the anchor point, optionally clipped to a box.
    pub fn ball_points(
        &self,
        i: usize,
        radius: &Rational,
        clip: Option<&BoundingBox>,
    ) -> Result<Vec<Point>, StageError> {
        let center = &self.anchor.points[i];
        let g = int(self.grid as i64);
        let shifted = i == self.anchor.shifted_point();
        let ranges: Vec<(BigInt, BigInt)> = center
            .iter()
            .map(|c| {
                let lo = ((c - radius) * &g).ceil().to_integer();
                let hi = ((c + radius) * &g).floor().to_integer();
                (lo, hi)
            })
            .collect();
        let count: f64 = ranges
            .iter()
            .map(|(lo, hi)| (hi - lo + BigInt::one()).to_f64().unwrap_or(f64::INFINITY).max(0.0))
            .product();
        if count > MAX_STAGE_POINTS as f64 {
            return Err(StageError::TooManyPoints(MAX_STAGE_POINTS));
        }
        let r2 = radius * radius;
        let mut out = Vec::new();
        let mut idx: Vec<BigInt> = ranges.iter().map(|(lo, _)| lo.clone()).collect();
        if ranges.iter().any(|(lo, hi)| lo > hi) {
            return Ok(out);
        }
        loop {
            let base: Point = idx
                .iter()
                .map(|k| Rational::new(k.clone(), g.numer().clone()))
                .collect();
            let p = if shifted {
                crate::geom::add(&base, &self.shift)
            } else {
                base
            };
            if dist2(&p, center) < r2 && clip.is_none_or(|b| b.contains(&p)) {
                out.push(p);
            }
            // odometer increment
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return Ok(out);
                }
                if idx[k] < ranges[k].1 {
                    idx[k] += 1;
                    break;
                }
                idx[k] = ranges[k].0.clone();
                k += 1;
            }
        }
    }

    /// Distance of `N^d P(z)` to the nearest integer.
    pub fn gap_margin(&self, z: &[Point]) -> Rational {
        let value = self.poly.eval(&flatten(z)).expect("tuple matches the stage");
        dist_to_nearest_integer(&(value * self.grid_power()))
    }

    /// `c N^-d`: perturbations below this keep the margin at least `1/4`.
    pub fn safe_radius(&self) -> Rational {
        &self.safe_c / self.grid_power()
    }

    /// Membership in the implicit stage set: the shifted or unshifted
    /// lattice inside the anchor balls, everything outside them.
    pub fn contains(&self, p: &[Rational]) -> bool {
        let r2 = &self.anchor.radius * &self.anchor.radius;
        let inside = self.anchor.points.iter().position(|x| dist2(p, x) < r2);
        match inside {
            None => true,
            Some(i) => {
                let base = if i == self.anchor.shifted_point() {
                    crate::geom::sub(p, &self.shift)
                } else {
                    p.to_vec()
                };
                let g = int(self.grid as i64);
                base.iter().all(|c| (c * &g).denom().is_one())
            }
        }
    }

    /// A member of the stage set close to `p`, chosen among the lattice
    /// points (plain and shifted) around `p`.
    pub fn nearest_member(&self, p: &[Rational]) -> Point {
        if self.contains(p) {
            return p.to_vec();
        }
        let g = int(self.grid as i64);
        let rounded: Vec<BigInt> = p.iter().map(|c| (c * &g).round().to_integer()).collect();
        let n = p.len();
        let mut best: Option<(Rational, Point)> = None;
        for code in 0..3usize.pow(n as u32) {
            let mut base = Vec::with_capacity(n);
            let mut c = code;
            for r in &rounded {
                let off = (c % 3) as i64 - 1;
                c /= 3;
                base.push(Rational::new(r + off, g.numer().clone()));
            }
            for cand in [base.clone(), crate::geom::add(&base, &self.shift)] {
                if self.contains(&cand) {
                    let d = dist2(&cand, p);
                    if best.as_ref().is_none_or(|(bd, _)| &d < bd) {
                        best = Some((d, cand));
                    }
                }
            }
        }
        best.expect("a lattice neighbour is always a member").1
    }

    /// Tuples drawn from the materialized points within `r/2` of each anchor.
    pub fn certification_tuples(&self) -> Result<Vec<Vec<Point>>, StageError> {
        let half = &self.anchor.radius / int(2);
        let lists = (0..self.anchor.len())
            .map(|i| self.ball_points(i, &half, None))
            .collect::<Result<Vec<_>, _>>()?;
        let mut tuples: Vec<Vec<Point>> = vec![Vec::new()];
        for list in &lists {
            let mut next = Vec::with_capacity(tuples.len() * list.len());
            for t in &tuples {
                for p in list {
                    let mut t2 = t.clone();
                    t2.push(p.clone());
                    next.push(t2);
                }
            }
            tuples = next;
            if tuples.len() > MAX_STAGE_POINTS {
                return Err(StageError::TooManyPoints(MAX_STAGE_POINTS));
            }
        }
        Ok(tuples)
    }

    /// Exhaustive check over lattice tuples (floor `3/10`) plus seeded
    /// perturbations of norm below `safe_radius` (floor `1/4`).
    pub fn certify_gap(&self, perturbations: usize, seed: u64) -> Result<GapReport, StageError> {
        let tuples = self.certification_tuples()?;
        let lattice_floor = ratio(3, 10);
        let perturbed_floor = ratio(1, 4);
        let lattice: Vec<Rational> = tuples.par_iter().map(|t| self.gap_margin(t)).collect();
        let mut zeros = 0;
        let mut violations = lattice.iter().filter(|m| **m < lattice_floor).count();
        for t in &tuples {
            if self.poly.eval(&flatten(t)).expect("arity").is_zero() {
                zeros += 1;
            }
        }
        let mut perturbed_min: Option<Rational> = None;
        if !tuples.is_empty() && perturbations > 0 {
            let samples = self.perturbed_tuples(&tuples, perturbations, seed);
            let margins: Vec<Rational> = samples.par_iter().map(|t| self.gap_margin(t)).collect();
            violations += margins.iter().filter(|m| **m < perturbed_floor).count();
            zeros += margins.iter().filter(|m| m.is_zero()).count();
            perturbed_min = margins.into_iter().min();
        }
        Ok(GapReport {
            lattice_tuples: tuples.len(),
            perturbations: if tuples.is_empty() { 0 } else { perturbations },
            min_lattice_margin: lattice.into_iter().min().as_ref().map(fmt_rational),
            min_perturbed_margin: perturbed_min.as_ref().map(fmt_rational),
            violations,
            zeros,
        })
    }

    /// Seeded perturbations: each coordinate moves by `s * k / (K * n)` with
    /// `|k| < K`, so every point moves by less than `s = safe_radius`.
    pub fn perturbed_tuples(&self, tuples: &[Vec<Point>], count: usize, seed: u64) -> Vec<Vec<Point>> {
        const K: i64 = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let step = self.safe_radius() / int(K * self.n as i64);
        (0..count)
            .map(|_| {
                let base = &tuples[rng.gen_range(0..tuples.len())];
                base.iter()
                    .map(|p| p.iter().map(|c| c + &step * int(rng.gen_range(-(K - 1)..K))).collect())
                    .collect()
            })
            .collect()
    }

    pub fn metadata(&self) -> StageMetadata {
        StageMetadata {
            n: self.n,
            m: self.anchor.len(),
            grid: self.grid,
            degree: self.degree,
            h: self.h.as_ref().map(fmt_rational),
            pivot: self.anchor.pivot,
            pivot_value: fmt_rational(&self.anchor.pivot_value),
            shift: fmt_point(&self.shift),
            radius: fmt_rational(&self.anchor.radius),
            safe_c: fmt_rational(&self.safe_c),
            lip_bound: fmt_rational(&self.lip_bound),
            second_bound: fmt_rational(&self.second_bound),
            safe_radius: fmt_rational(&self.safe_radius()),
            thickness_certified: self.thickness_certified,
            bounding_box: BoxDoc::from(&self.bounding_box),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = RationalPoly;

    fn pt(v: &[i64]) -> Point {
        v.iter().map(|&x| int(x)).collect()
    }

    /// sum (x_i - y_i)(z_i - x_i) for n = 2.
    fn right_angle_p2() -> P {
        let nv = 6;
        let x = |i| P::var(nv, i);
        (0..2).fold(P::zero(nv), |acc, i| acc + (x(i) - x(2 + i)) * (x(4 + i) - x(i)))
    }

    fn identity_poly() -> P {
        P::var(1, 0)
    }

    #[test]
    fn pivot_of_right_angle_anchor() {
        // d/dx1 = (z1 - x1) - (x1 - y1) = 0 - (0 - 1) = 1.
        let (v, a) = find_pivot(&right_angle_p2(), &[pt(&[0, 0]), pt(&[1, 0]), pt(&[0, 1])]).unwrap();
        assert_eq!((v, a), (0, int(1)));
    }

    #[test]
    fn pivot_of_linear_and_constant() {
        assert_eq!(find_pivot(&identity_poly(), &[pt(&[0])]).unwrap(), (0, int(1)));
        assert_eq!(
            find_pivot(&P::constant(1, int(3)), &[pt(&[0])]),
            Err(StageError::DegenerateAnchor)
        );
    }

    #[test]
    fn radius_examples() {
        assert_eq!(
            choose_radius(&identity_poly(), &[pt(&[0])], 0, &int(1)).unwrap(),
            int(1)
        );
        // x1 - y1 has constant partial; anchors at distance 2 cap r at 1/2.
        let p = P::var(2, 0) - P::var(2, 1);
        assert_eq!(
            choose_radius(&p, &[pt(&[0]), pt(&[2])], 0, &int(1)).unwrap(),
            ratio(1, 2)
        );
    }

    #[test]
    fn right_angle_radius_is_certified_at_corners() {
        let p = right_angle_p2();
        let anchor = Anchor::new(&p, vec![pt(&[0, 0]), pt(&[1, 0]), pt(&[0, 1])]).unwrap();
        let r = anchor.radius.clone();
        assert_eq!(r, ratio(1, 16));
        // The pivot partial is multilinear here, so its extremes on the box
        // are attained at corners.
        let q = p.partial(anchor.pivot).unwrap();
        let flat = flatten(&anchor.points);
        for code in 0..(1 << 6) {
            let corner: Vec<Rational> = flat
                .iter()
                .enumerate()
                .map(|(k, x)| if code >> k & 1 == 1 { x + &r } else { x - &r })
                .collect();
            let dev = (q.eval(&corner).unwrap() - &anchor.pivot_value).abs();
            assert!(dev <= ratio(1, 3));
        }
    }

    #[test]
    fn grid_for_example_scale() {
        assert_eq!(grid_for_scale(2, &ratio(15, 100)), BigInt::from(10));
        assert_eq!(grid_for_scale(1, &ratio(1, 10)), BigInt::from(10));
        assert_eq!(grid_for_scale(4, &ratio(1, 5)), BigInt::from(10));
    }

    fn linear_stage() -> (LatticeStage, StagePointSet) {
        let p = identity_poly();
        let anchor = Anchor::new(&p, vec![pt(&[0])]).unwrap();
        let bbox = BoundingBox::new(vec![ratio(-1, 2)], vec![ratio(1, 2)]);
        build_stage(&p, &anchor, &ratio(1, 10), &bbox, ThicknessPolicy::Record).unwrap()
    }

    #[test]
    fn linear_stage_lattice() {
        let (stage, points) = linear_stage();
        assert_eq!(stage.grid, 10);
        assert_eq!(stage.shift, vec![ratio(1, 20)]);
        let expected: Vec<Point> = (-5..=4).map(|k| vec![ratio(k, 10) + ratio(1, 20)]).collect();
        assert_eq!(points.balls, vec![expected]);
        assert_eq!(stage.thickness_certified, Some(false));
    }

    #[test]
    fn linear_stage_margins() {
        let (stage, _) = linear_stage();
        assert_eq!(stage.gap_margin(&[vec![ratio(7, 20)]]), ratio(1, 2));
        assert_eq!(stage.gap_margin(&[vec![ratio(7, 20) + ratio(1, 100)]]), ratio(2, 5));
        assert_eq!(stage.lip_bound, int(1));
        assert_eq!(stage.safe_radius(), ratio(1, 200));
    }

    #[test]
    fn shift_formula_with_negative_pivot() {
        // -x0^2 - x0 vanishes at 0 with pivot value -1; d = 2.
        let x = P::var(1, 0);
        let p = -(&x * &x) - x;
        let anchor = Anchor::new(&p, vec![pt(&[0])]).unwrap();
        assert_eq!(anchor.pivot_value, int(-1));
        let bbox = BoundingBox::cube(&[int(0)], &ratio(1, 10));
        let (stage, _) = build_stage_with_grid(&p, &anchor, 10, &bbox).unwrap();
        assert_eq!(stage.shift, vec![ratio(-1, 200)]);
    }

    #[test]
    fn tiny_lipschitz_caps_safe_constant() {
        let p = P::var(1, 0);
        let anchor = Anchor::new(&p, vec![pt(&[0])]).unwrap();
        let consts = constants(&(p.scale(&int(1))), &anchor, 10, 1);
        assert_eq!(consts.safe_c, ratio(1, 20));
        // Scaling the gradient down by 100 makes 1/(20 C'') exceed 1/4.
        let flat = P::var(1, 0).scale(&ratio(1, 100));
        let c = constants(&flat, &anchor, 10, 1);
        assert_eq!(c.safe_c, ratio(1, 4));
    }

    #[test]
    fn strict_policy_reports_scale() {
        let p = identity_poly();
        let anchor = Anchor::new(&p, vec![pt(&[0])]).unwrap();
        let bbox = BoundingBox::cube(&[int(0)], &ratio(1, 2));
        match build_stage(&p, &anchor, &ratio(1, 10), &bbox, ThicknessPolicy::Require) {
            Err(StageError::ScaleTooCoarse { ln_admissible_h, .. }) => {
                // h/ln(1/h) <= 1/(20 N) with N = 1/h needs ln(1/h) >= 20.
                assert!(ln_admissible_h <= -20.0, "{ln_admissible_h}");
                assert!(ln_admissible_h > -22.0, "{ln_admissible_h}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_integer_polynomial_rejected() {
        let p = P::var(1, 0).scale(&ratio(1, 2));
        let anchor = Anchor::new(&p, vec![pt(&[0])]).unwrap();
        let bbox = BoundingBox::cube(&[int(0)], &int(1));
        assert_eq!(
            build_stage_with_grid(&p, &anchor, 10, &bbox).unwrap_err(),
            StageError::NonIntegerCoefficients
        );
    }

    #[test]
    fn coarse_grid_rejected() {
        // x0^2 * 50 + x0: C' = 50 forces N^2 >= 375.
        let x = P::var(1, 0);
        let p = (&x * &x).scale(&int(50)) + x;
        let anchor = Anchor::new(&p, vec![pt(&[0])]).unwrap();
        let bbox = BoundingBox::cube(&[int(0)], &ratio(1, 100));
        match build_stage_with_grid(&p, &anchor, 3, &bbox) {
            Err(StageError::GridTooCoarse { grid: 3, min_grid }) => assert!(min_grid > 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stage_export_formats() {
        let (stage, points) = linear_stage();
        let csv = points.to_csv(1);
        assert!(csv.starts_with("ball_index,coord_0\n0,-9/20\n"));
        let meta = stage.metadata();
        assert_eq!(meta.grid, 10);
        assert_eq!(meta.safe_radius, "1/200");
        let json = serde_json::to_string(&meta).unwrap();
        let back: StageMetadata = serde_json::from_str(&json).unwrap();
        assert_eq!(back, meta);
    }
}
