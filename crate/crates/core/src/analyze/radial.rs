//! Radial projection onto the unit sphere around a cloud point.

use num_traits::Zero;

use crate::analyze::cloud::PointCloud;
use crate::analyze::AnalyzeError;
use crate::geom::{norm2, sub};
use crate::scalar::rational_to_f64;

/// `(y - x) / |y - x|` for every other point `y`, in cloud order.
pub fn radial_projection(cloud: &PointCloud, center: usize) -> Result<Vec<Vec<f64>>, AnalyzeError> {
    let x = cloud.points.get(center).ok_or(AnalyzeError::BadIndex(center))?;
    let mut out = Vec::with_capacity(cloud.len().saturating_sub(1));
    for (i, y) in cloud.points.iter().enumerate() {
        if i == center {
            continue;
        }
        let v = sub(y, x);
        let r2 = norm2(&v);
        if r2.is_zero() {
            return Err(AnalyzeError::Coincident(center, i));
        }
        let len = rational_to_f64(&r2).sqrt();
        out.push(v.iter().map(|c| rational_to_f64(c) / len).collect());
    }
    Ok(out)
}

/// Chord length `2 sin(alpha/2)` of a unit circle arc of angle `alpha`.
pub fn chord(alpha: f64) -> f64 {
    2.0 * (alpha / 2.0).sin()
}

/// Inverse of [`chord`] on `[0, 2]`.
pub fn chord_angle(d: f64) -> f64 {
    2.0 * (d / 2.0).clamp(-1.0, 1.0).asin()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::analyze::cloud::Provenance;
    use crate::scalar::{int, ratio};

    #[test]
    fn three_four_five() {
        let c = PointCloud::new(vec![vec![int(0), int(0)], vec![int(3), int(4)]], Provenance::External).unwrap();
        let u = radial_projection(&c, 0).unwrap();
        assert_eq!(u, vec![vec![0.6, 0.8]]);
    }

    #[test]
    fn tiny_offsets_normalize() {
        let c = PointCloud::new(
            vec![vec![int(1), int(1)], vec![int(1) + ratio(1, 1 << 40), int(1)]],
            Provenance::External,
        )
        .unwrap();
        assert_eq!(radial_projection(&c, 1).unwrap(), vec![vec![-1.0, 0.0]]);
    }

    #[test]
    fn chords() {
        assert!((chord(PI) - 2.0).abs() < 1e-15);
        assert!((chord(PI / 3.0) - 1.0).abs() < 1e-15);
        assert!((chord_angle(1.0) - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bad_center() {
        let c = PointCloud::new(vec![vec![int(0)]], Provenance::External).unwrap();
        assert!(matches!(radial_projection(&c, 3), Err(AnalyzeError::BadIndex(3))));
    }
}
