//! The uniform probability measure on the leaf balls of a tree, and the
//! gauge-function mass bound.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{dist2, Point};
use crate::nested::tree::BallTree;
use crate::scalar::{fmt_rational, int, rational_to_f64, Rational};

/// Monte Carlo samples per query in dimension two and up.
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone)]
pub struct MeasureEstimate {
    pub n: usize,
    /// Leaf centers sorted lexicographically.
    pub leaves: Vec<Point>,
    pub leaf_radius: Rational,
    pub samples: usize,
}

/// `mu(B(x, r))`, exact in dimension one.
#[derive(Debug, Clone, PartialEq)]
pub struct Mass {
    pub value: f64,
    pub exact: Option<Rational>,
    /// One standard error of the Monte Carlo part; zero when exact.
    pub std_error: f64,
}

impl MeasureEstimate {
    pub fn new(tree: &BallTree) -> Self {
        let mut leaves = tree.leaf_centers();
        leaves.sort();
        MeasureEstimate {
            n: tree.schedule.n,
            leaves,
            leaf_radius: tree.leaf_radius().clone(),
            samples: DEFAULT_SAMPLES,
        }
    }

    /// Leaves whose first coordinate lies within `r + b` of `x`.
    fn nearby(&self, x: &[Rational], r: &Rational) -> &[Point] {
        let span = r + &self.leaf_radius;
        let lo = &x[0] - &span;
        let hi = &x[0] + &span;
        let a = self.leaves.partition_point(|p| p[0] < lo);
        let b = self.leaves.partition_point(|p| p[0] <= hi);
        &self.leaves[a..b]
    }

    /// `lambda(B(x,r) n F^k) / lambda(F^k)`; `seed` drives the sampling used
    /// for leaves cut by the sphere when `n >= 2`.
    pub fn mass(&self, x: &[Rational], r: &Rational, seed: u64) -> Mass {
        let b = &self.leaf_radius;
        let total = self.leaves.len();
        if total == 0 {
            return Mass {
                value: 0.0,
                exact: Some(Rational::zero()),
                std_error: 0.0,
            };
        }
        if self.n == 1 {
            let mut covered = Rational::zero();
            for c in self.nearby(x, r) {
                let lo = max(&c[0] - b, &x[0] - r);
                let hi = min(&c[0] + b, &x[0] + r);
                if hi > lo {
                    covered += hi - lo;
                }
            }
            let q = covered / (b * int(2) * int(total as i64));
            return Mass {
                value: rational_to_f64(&q),
                exact: Some(q),
                std_error: 0.0,
            };
        }
        let inner = r - b;
        let outer2 = (r + b) * (r + b);
        let mut full = 0usize;
        let mut partial = Vec::new();
        for c in self.nearby(x, r) {
            let d2 = dist2(c, x);
            if d2 >= outer2 {
                continue;
            }
            if !inner.is_negative() && d2 <= &inner * &inner {
                full += 1;
            } else {
                partial.push(c);
            }
        }
        if partial.is_empty() {
            let q = Rational::new(full.into(), total.into());
            return Mass {
                value: rational_to_f64(&q),
                exact: Some(q),
                std_error: 0.0,
            };
        }
        let per_leaf = (self.samples / partial.len()).max(1000);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xf: Vec<f64> = x.iter().map(rational_to_f64).collect();
        let rf = rational_to_f64(r);
        let bf = rational_to_f64(b);
        let mut frac = 0.0;
        let mut var = 0.0;
        for c in partial {
            let cf: Vec<f64> = c.iter().map(rational_to_f64).collect();
            let mut hits = 0usize;
            for _ in 0..per_leaf {
                let p = sample_in_ball(&mut rng, &cf, bf);
                let d2: f64 = p.iter().zip(&xf).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 <= rf * rf {
                    hits += 1;
                }
            }
            let f = hits as f64 / per_leaf as f64;
            frac += f;
            var += f * (1.0 - f) / per_leaf as f64;
        }
        Mass {
            value: (full as f64 + frac) / total as f64,
            exact: None,
            std_error: var.sqrt() / total as f64,
        }
    }
}

fn max(a: Rational, b: Rational) -> Rational {
    if a >= b {
        a
    } else {
        b
    }
}

fn min(a: Rational, b: Rational) -> Rational {
    if a <= b {
        a
    } else {
        b
    }
}

fn sample_in_ball(rng: &mut ChaCha8Rng, c: &[f64], r: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = c.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s: f64 = p.iter().map(|v| v * v).sum();
        if s <= 1.0 {
            return p.iter().zip(c).map(|(v, ci)| ci + r * v).collect();
        }
    }
}

/// `r^{n/d} (ln 1/r)^{n+1}`.
pub fn gauge(r: f64, n: usize, d: u32) -> f64 {
    r.powf(n as f64 / d as f64) * (-r.ln()).powi(n as i32 + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassBoundReport {
    pub trials: usize,
    pub seed: u64,
    pub constant: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub violations: usize,
    /// Largest `mu / gauge` seen.
    pub max_ratio: f64,
    pub nonzero_masses: usize,
    pub worst: Option<MassSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSample {
    pub center: Vec<String>,
    pub radius: f64,
    pub mass: f64,
}

/// Seeded balls: centers uniform in the root box, radii log-uniform in
/// `[r_min, h_1/4]`.
pub fn random_balls(tree: &BallTree, trials: usize, seed: u64, r_min: f64) -> Vec<(Point, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_max = max_radius(tree);
    let root = &tree.root;
    (0..trials)
        .map(|_| {
            let center: Point = root
                .center
                .iter()
                .map(|c| {
                    let off: f64 = rng.gen_range(-1.0..1.0);
                    c + Rational::from_float(off * rational_to_f64(&root.radius)).expect("finite")
                })
                .collect();
            let t: f64 = rng.gen_range(0.0..1.0);
            let r = (r_min.ln() + t * (r_max.ln() - r_min.ln())).exp();
            (center, r)
        })
        .collect()
}

fn max_radius(tree: &BallTree) -> f64 {
    tree.schedule.h(1).map(|h| rational_to_f64(h) / 4.0).unwrap_or(0.025)
}

fn masses(measure: &MeasureEstimate, balls: &[(Point, f64)], seed: u64) -> Vec<f64> {
    balls
        .par_iter()
        .enumerate()
        .map(|(i, (x, r))| {
            let rq = Rational::from_float(*r).expect("finite radius");
            measure
                .mass(x, &rq, seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
                .value
        })
        .collect()
}

/// Twice the largest observed `mu / gauge`, for freezing as a regression
/// constant.
pub fn fit_mass_constant(tree: &BallTree, trials: usize, seed: u64, r_min: f64) -> f64 {
    let measure = MeasureEstimate::new(tree);
    let balls = random_balls(tree, trials, seed, r_min);
    let m = masses(&measure, &balls, seed);
    let (n, d) = (tree.schedule.n, tree.schedule.d);
    2.0 * balls
        .iter()
        .zip(&m)
        .map(|((_, r), mu)| mu / gauge(*r, n, d))
        .fold(0.0, f64::max)
}

pub fn ball_mass_bound_check(tree: &BallTree, trials: usize, seed: u64, constant: f64, r_min: f64) -> MassBoundReport {
    let measure = MeasureEstimate::new(tree);
    let balls = random_balls(tree, trials, seed, r_min);
    let m = masses(&measure, &balls, seed);
    let (n, d) = (tree.schedule.n, tree.schedule.d);
    let mut violations = 0;
    let mut max_ratio = 0.0;
    let mut worst = None;
    for ((x, r), mu) in balls.iter().zip(&m) {
        let ratio = mu / gauge(*r, n, d);
        if *mu > constant * gauge(*r, n, d) {
            violations += 1;
        }
        if ratio > max_ratio {
            max_ratio = ratio;
            worst = Some(MassSample {
                center: x.iter().map(fmt_rational).collect(),
                radius: *r,
                mass: *mu,
            });
        }
    }
    MassBoundReport {
        trials,
        seed,
        constant,
        r_min,
        r_max: max_radius(tree),
        violations,
        max_ratio,
        nonzero_masses: m.iter().filter(|v| **v > 0.0).count(),
        worst,
    }
}

/// `mu` of the root ball: always one.
pub fn root_mass(tree: &BallTree) -> Rational {
    let measure = MeasureEstimate::new(tree);
    let r = &tree.root.radius;
    match measure.mass(&tree.root.center, r, 0).exact {
        Some(q) => q,
        None => Rational::one(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nested::net::{packing_constants, GridNet};
    use crate::nested::schedule::{make_schedule, ScheduleMode};
    use crate::nested::tree::build_tree;
    use crate::scalar::ratio;

    fn tree(n: usize) -> BallTree {
        let s = make_schedule(n, 1, 2, ScheduleMode::Relaxed, &ratio(1, 20)).unwrap();
        build_tree(&s, vec![int(0); n], &GridNet, packing_constants(n)).unwrap()
    }

    #[test]
    fn probability_normalization() {
        assert_eq!(root_mass(&tree(1)), int(1));
        assert_eq!(root_mass(&tree(2)), int(1));
    }

    #[test]
    fn far_ball_is_empty() {
        let t = tree(1);
        let m = MeasureEstimate::new(&t);
        assert_eq!(m.mass(&[int(5)], &ratio(1, 10), 0).exact, Some(int(0)));
    }

    #[test]
    fn half_a_leaf() {
        let t = tree(1);
        let m = MeasureEstimate::new(&t);
        let c = &m.leaves[0];
        let b = m.leaf_radius.clone();
        // covers exactly the right half of the first leaf
        let x = vec![&c[0] + &b];
        let got = m.mass(&x, &b, 0).exact.unwrap();
        assert_eq!(got, ratio(1, 2) / int(m.leaves.len() as i64));
    }

    #[test]
    fn planar_partial_leaf_estimate() {
        let t = tree(2);
        let m = MeasureEstimate::new(&t);
        let b = m.leaf_radius.clone();
        // equal disks at center distance b overlap in a lens of area
        // b^2 (2 pi/3 - sqrt(3)/2)
        let mut x = m.leaves[0].clone();
        x[0] += b.clone();
        let got = m.mass(&x, &b, 7);
        assert!(got.exact.is_none());
        let lens = (2.0 * std::f64::consts::PI / 3.0 - 3f64.sqrt() / 2.0) / std::f64::consts::PI;
        let expect = lens / m.leaves.len() as f64;
        assert!((got.value - expect).abs() < 5.0 * got.std_error, "{got:?} vs {expect}");
    }

    #[test]
    fn gauge_values() {
        assert!((gauge(0.01, 1, 1) - 0.01 * (100f64.ln()).powi(2)).abs() < 1e-12);
        assert_eq!(gauge(1.0, 1, 1), 0.0);
    }

    #[test]
    fn calibrated_constant_has_no_violations() {
        let t = tree(1);
        let b = rational_to_f64(t.leaf_radius());
        let c = fit_mass_constant(&t, 300, 1, b);
        let rep = ball_mass_bound_check(&t, 300, 1, c, b);
        assert_eq!(rep.violations, 0);
        assert!(rep.max_ratio <= c);
    }
}
