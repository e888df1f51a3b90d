//! Box-counting dimension estimates.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DimensionError {
    #[error("need at least 3 scales, got {0}")]
    TooFewScales(usize),
    #[error("scales must be positive and strictly decreasing")]
    BadScales,
    #[error("no points")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCount {
    pub scale: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub counts: Vec<BoxCount>,
    /// Every scale saw a single occupied box.
    pub degenerate: bool,
}

impl DimensionEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scale,count\n");
        for c in &self.counts {
            out.push_str(&format!("{:e},{}\n", c.scale, c.count));
        }
        out
    }
}

/// Occupied boxes of the grid `eps Z^n`, keyed by `floor(x / eps)`.
pub fn occupied_boxes<T: Scalar>(points: &[Vec<T>], eps: &T) -> usize {
    let keys: HashSet<Vec<i64>> = points
        .iter()
        .map(|p| p.iter().map(|c| (c.clone() / eps.clone()).floor_i64()).collect())
        .collect();
    keys.len()
}

/// Least-squares slope of `ln count` against `ln(1/eps)`.
pub fn box_counting_dimension<T: Scalar>(points: &[Vec<T>], scales: &[T]) -> Result<DimensionEstimate, DimensionError> {
    if scales.len() < 3 {
        return Err(DimensionError::TooFewScales(scales.len()));
    }
    if points.is_empty() {
        return Err(DimensionError::Empty);
    }
    let zero = T::zero();
    if scales.iter().any(|s| s <= &zero) || scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(DimensionError::BadScales);
    }
    let counts: Vec<usize> = scales.par_iter().map(|e| occupied_boxes(points, e)).collect();
    let xs: Vec<f64> = scales.iter().map(|e| -e.ln_lossy()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, intercept, stderr) = least_squares(&xs, &ys);
    Ok(DimensionEstimate {
        slope,
        stderr,
        intercept,
        counts: scales
            .iter()
            .zip(&counts)
            .map(|(s, &count)| BoxCount {
                scale: s.to_f64_lossy(),
                count,
            })
            .collect(),
        degenerate: counts.iter().all(|&c| c == 1),
    })
}

/// `(slope, intercept, standard error of the slope)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let stderr = if xs.len() > 2 {
        (sse / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}

/// `k` scales from `hi` down to `lo`, evenly spaced in log scale.
pub fn geometric_scales<T: Scalar>(hi: f64, lo: f64, k: usize) -> Vec<T> {
    assert!(k >= 2 && hi > lo && lo > 0.0);
    (0..k)
        .map(|i| {
            let t = i as f64 / (k - 1) as f64;
            T::from_f64_lossy((hi.ln() + t * (lo.ln() - hi.ln())).exp())
        })
        .collect()
}

/// Endpoints of the stage-`k` middle-thirds Cantor intervals.
pub fn cantor_endpoints<T: Scalar>(k: u32) -> Vec<Vec<T>> {
    let mut ends: Vec<(i64, i64)> = vec![(0, 1)];
    let mut den = 1i64;
    for _ in 0..k {
        den *= 3;
        ends = ends
            .into_iter()
            .flat_map(|(a, b)| [(3 * a, 3 * a + (b - a)), (3 * b - (b - a), 3 * b)])
            .collect();
    }
    let mut out = Vec::with_capacity(2 * ends.len());
    for (a, b) in ends {
        for v in [a, b] {
            out.push(vec![T::from_int(v) / T::from_int(den)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};

    fn pow3(k: i64) -> Rational {
        ratio(1, 3i64.pow(k as u32))
    }

    #[test]
    fn full_grid_has_dimension_one() {
        let k = 10;
        let pts: Vec<Vec<Rational>> = (0..1i64 << k).map(|i| vec![ratio(i, 1 << k)]).collect();
        let scales: Vec<Rational> = (1..=k).map(|j| ratio(1, 1 << j)).collect();
        let est = box_counting_dimension(&pts, &scales).unwrap();
        assert!((est.slope - 1.0).abs() < 0.05, "{est:?}");
    }

    #[test]
    fn cantor_slope() {
        let pts = cantor_endpoints::<Rational>(6);
        assert_eq!(pts.len(), 128);
        let scales: Vec<Rational> = (1..=6).map(pow3).collect();
        let est = box_counting_dimension(&pts, &scales).unwrap();
        let target = 2f64.ln() / 3f64.ln();
        assert!((est.slope - target).abs() < 0.05, "{est:?}");
    }

    #[test]
    fn cantor_slope_in_floats() {
        let pts = cantor_endpoints::<f64>(6);
        let scales: Vec<f64> = (1..=6).map(|j| 3f64.powi(-j)).collect();
        let est = box_counting_dimension(&pts, &scales).unwrap();
        assert!((est.slope - 2f64.ln() / 3f64.ln()).abs() < 0.05);
    }

    #[test]
    fn single_point_is_degenerate() {
        let pts = vec![vec![ratio(1, 3)]];
        let scales: Vec<Rational> = (1..=4).map(pow3).collect();
        let est = box_counting_dimension(&pts, &scales).unwrap();
        assert_eq!(est.slope, 0.0);
        assert!(est.degenerate);
    }

    #[test]
    fn argument_checks() {
        let pts = vec![vec![0.5f64]];
        assert_eq!(
            box_counting_dimension(&pts, &[0.5, 0.25]),
            Err(DimensionError::TooFewScales(2))
        );
        assert_eq!(
            box_counting_dimension(&pts, &[0.5, 0.5, 0.25]),
            Err(DimensionError::BadScales)
        );
        let none: Vec<Vec<f64>> = Vec::new();
        assert_eq!(
            box_counting_dimension(&none, &[0.5, 0.25, 0.1]),
            Err(DimensionError::Empty)
        );
    }

    #[test]
    fn csv_table() {
        let pts = cantor_endpoints::<f64>(2);
        let est = box_counting_dimension(&pts, &[1.0 / 3.0, 1.0 / 9.0, 1.0 / 27.0]).unwrap();
        let csv = est.to_csv();
        assert!(csv.starts_with("scale,count\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn least_squares_exact_line() {
        let (s, i, e) = least_squares(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-12 && (i - 1.0).abs() < 1e-12 && e < 1e-12);
    }
}
