//! Exact angle certificates.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::analyze::cloud::PointCloud;
use crate::analyze::AnalyzeError;
use crate::geom::{dot, norm2, sub};
use crate::scalar::{fmt_rational, rational_to_f64, Rational};

/// `cos(yxz) = dot / sqrt(l1 l2)`, kept as three exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleCertificate {
    pub vertex: usize,
    pub y: usize,
    pub z: usize,
    pub dot: Rational,
    pub l1: Rational,
    pub l2: Rational,
    pub cos: f64,
}

impl AngleCertificate {
    pub fn new(vertex: usize, y: usize, z: usize, x: &[Rational], py: &[Rational], pz: &[Rational]) -> Self {
        let u = sub(py, x);
        let v = sub(pz, x);
        let d = dot(&u, &v);
        let l1 = norm2(&u);
        let l2 = norm2(&v);
        let cos = rational_to_f64(&d) / (rational_to_f64(&l1) * rational_to_f64(&l2)).sqrt();
        AngleCertificate {
            vertex,
            y,
            z,
            dot: d,
            l1,
            l2,
            cos,
        }
    }

    /// `cos^2` with its sign, as an exact pair.
    pub fn signed_cos2(&self) -> (i8, Rational) {
        (sign(&self.dot), &self.dot * &self.dot / (&self.l1 * &self.l2))
    }

    /// Orders by cosine, so larger angles compare smaller.
    pub fn cmp_cos(&self, other: &AngleCertificate) -> Ordering {
        let (sa, sb) = (sign(&self.dot), sign(&other.dot));
        if sa != sb {
            return sa.cmp(&sb);
        }
        let lhs = &self.dot * &self.dot * &other.l1 * &other.l2;
        let rhs = &other.dot * &other.dot * &self.l1 * &self.l2;
        if sa >= 0 {
            lhs.cmp(&rhs)
        } else {
            rhs.cmp(&lhs)
        }
    }

    pub fn same_angle(&self, other: &AngleCertificate) -> bool {
        self.cmp_cos(other) == Ordering::Equal
    }

    /// `cos^2 = q`, ignoring the sign of the cosine.
    pub fn cos2_equals(&self, q: &Rational) -> bool {
        &self.dot * &self.dot == q * &self.l1 * &self.l2
    }

    /// Compares the cosine with a rational `t`.
    pub fn cmp_value(&self, t: &Rational) -> Ordering {
        cmp_cos_value(&self.dot, &(&self.l1 * &self.l2), t)
    }

    pub fn to_doc(&self) -> AngleDoc {
        AngleDoc {
            triple: [self.y, self.vertex, self.z],
            dot: fmt_rational(&self.dot),
            l1: fmt_rational(&self.l1),
            l2: fmt_rational(&self.l2),
            cos: self.cos,
        }
    }
}

/// Compares `dot / sqrt(prod)` with `t`, for `prod > 0`.
pub fn cmp_cos_value(dot: &Rational, prod: &Rational, t: &Rational) -> Ordering {
    let (sa, sb) = (sign(dot), sign(t));
    if sa != sb {
        return sa.cmp(&sb);
    }
    let lhs = dot * dot;
    let rhs = t * t * prod;
    if sa >= 0 {
        lhs.cmp(&rhs)
    } else {
        rhs.cmp(&lhs)
    }
}

fn sign(q: &Rational) -> i8 {
    if q.is_zero() {
        0
    } else if q.is_positive() {
        1
    } else {
        -1
    }
}

/// One certificate per vertex and unordered pair of other points `y < z`.
pub fn angle_inventory(cloud: &PointCloud) -> Result<Vec<AngleCertificate>, AnalyzeError> {
    if cloud.n < 2 {
        return Err(AnalyzeError::NeedsPlane(cloud.n));
    }
    let pts = &cloud.points;
    let k = pts.len();
    let mut out = Vec::new();
    for x in 0..k {
        for y in 0..k {
            for z in y + 1..k {
                if y != x && z != x {
                    out.push(AngleCertificate::new(x, y, z, &pts[x], &pts[y], &pts[z]));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleDoc {
    /// `[y, x, z]` for the angle at `x`.
    pub triple: [usize; 3],
    pub dot: String,
    pub l1: String,
    pub l2: String,
    pub cos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub angles: usize,
    pub distinct: usize,
    pub right_angles: usize,
    /// Hits of `cos^2 = q` for each requested target.
    pub target_hits: BTreeMap<String, Vec<[usize; 3]>>,
    pub inventory: Vec<AngleDoc>,
}

pub fn angle_report(cloud: &PointCloud, targets: &[Rational]) -> Result<AngleReport, AnalyzeError> {
    let inv = angle_inventory(cloud)?;
    let mut classes: BTreeMap<(i8, Rational), usize> = BTreeMap::new();
    for a in &inv {
        *classes.entry(a.signed_cos2()).or_default() += 1;
    }
    let target_hits = targets
        .iter()
        .map(|q| {
            let hits = inv
                .iter()
                .filter(|a| a.cos2_equals(q))
                .map(|a| [a.y, a.vertex, a.z])
                .collect();
            (fmt_rational(q), hits)
        })
        .collect();
    Ok(AngleReport {
        angles: inv.len(),
        distinct: classes.len(),
        right_angles: inv.iter().filter(|a| a.dot.is_zero()).count(),
        target_hits,
        inventory: inv.iter().map(AngleCertificate::to_doc).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyze::cloud::Provenance;
    use crate::scalar::{int, ratio};

    fn cloud(pts: &[(i64, i64)]) -> PointCloud {
        PointCloud::new(
            pts.iter().map(|&(a, b)| vec![int(a), int(b)]).collect(),
            Provenance::External,
        )
        .unwrap()
    }

    #[test]
    fn three_four_five() {
        let inv = angle_inventory(&cloud(&[(0, 0), (4, 0), (0, 3)])).unwrap();
        assert_eq!(inv.len(), 3);
        let at = |v: usize| inv.iter().find(|a| a.vertex == v).unwrap();
        assert!(at(0).dot.is_zero());
        assert_eq!(at(1).cmp_value(&ratio(4, 5)), Ordering::Equal);
        assert_eq!(at(2).cmp_value(&ratio(3, 5)), Ordering::Equal);
        assert!(at(1).cos2_equals(&ratio(16, 25)));
        assert!((at(2).cos - 0.6).abs() < 1e-15);
        assert_eq!(at(1).cmp_cos(at(2)), Ordering::Greater);
    }

    #[test]
    fn obtuse_ordering() {
        // 120 and 135 degrees at the origin
        let a = AngleCertificate::new(0, 1, 2, &[int(0), int(0)], &[int(2), int(0)], &[int(-1), int(1)]);
        let pts = [vec![int(0), int(0)], vec![int(1), int(0)], vec![int(-1), int(3)]];
        let b = AngleCertificate::new(0, 1, 2, &pts[0], &pts[1], &pts[2]);
        assert_eq!(a.signed_cos2(), (-1, ratio(1, 2)));
        assert_eq!(b.signed_cos2(), (-1, ratio(1, 10)));
        assert_eq!(a.cmp_cos(&b), Ordering::Less);
        assert_eq!(a.cmp_value(&ratio(-7, 10)), Ordering::Less);
        assert_eq!(a.cmp_value(&ratio(-7, 11)), Ordering::Less);
        assert_eq!(a.cmp_value(&ratio(-71, 100)), Ordering::Greater);
    }

    #[test]
    fn equilateral_bisector_witness() {
        let c = cloud(&[(0, 0), (2, 0), (1, 5)]);
        let spec = crate::presets::builtin_preset("equilateral", 2, &Default::default()).unwrap();
        assert_eq!(spec[0].eval(&c.points).unwrap(), vec![int(0)]);
    }

    #[test]
    fn report_counts() {
        let rep = angle_report(&cloud(&[(0, 0), (1, 0), (1, 1), (0, 1)]), &[ratio(1, 2)]).unwrap();
        assert_eq!(rep.angles, 12);
        assert_eq!(rep.right_angles, 4);
        assert_eq!(rep.target_hits["1/2"].len(), 8);
        assert_eq!(rep.distinct, 2);
    }

    #[test]
    fn line_has_no_angles() {
        let c = PointCloud::new(vec![vec![int(0)], vec![int(1)]], Provenance::External).unwrap();
        assert!(matches!(angle_inventory(&c), Err(AnalyzeError::NeedsPlane(1))));
    }
}
