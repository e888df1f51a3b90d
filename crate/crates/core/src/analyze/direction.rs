//! Repeated directions among difference vectors.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::analyze::cloud::PointCloud;
use crate::analyze::AnalyzeError;
use crate::geom::sub;
use crate::scalar::Rational;

/// Scales a nonzero vector so its first nonzero entry is one; parallel
/// vectors map to the same key. The zero vector maps to itself.
pub fn canonical_direction(v: &[Rational]) -> Vec<Rational> {
    match v.iter().find(|c| !c.is_zero()) {
        None => v.to_vec(),
        Some(lead) => {
            let lead = lead.clone();
            v.iter().map(|c| c / &lead).collect()
        }
    }
}

/// All 2x2 minors of `(u, v)` vanish.
pub fn parallel(u: &[Rational], v: &[Rational]) -> bool {
    (0..u.len()).all(|a| (a + 1..u.len()).all(|b| &u[a] * &v[b] == &u[b] * &v[a]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionReport {
    pub pairs: usize,
    /// Unordered pairs of distinct point pairs with parallel differences.
    pub parallel: Vec<[[usize; 2]; 2]>,
    /// The same test after projecting to the first two coordinates.
    pub parallel_projected: Vec<[[usize; 2]; 2]>,
    /// Pairs whose projected difference vanishes.
    pub projection_degenerate: Vec<[usize; 2]>,
    pub collinear_triples: Vec<[usize; 3]>,
    pub unique: bool,
}

fn grouped(keys: &[(Vec<Rational>, [usize; 2])]) -> Vec<[[usize; 2]; 2]> {
    let mut groups: BTreeMap<&Vec<Rational>, Vec<[usize; 2]>> = BTreeMap::new();
    for (k, p) in keys {
        groups.entry(k).or_default().push(*p);
    }
    let mut out = Vec::new();
    for members in groups.values() {
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                out.push([members[a], members[b]]);
            }
        }
    }
    out.sort();
    out
}

pub fn direction_report(cloud: &PointCloud) -> Result<DirectionReport, AnalyzeError> {
    if cloud.n < 2 {
        return Err(AnalyzeError::NeedsPlane(cloud.n));
    }
    let pts = &cloud.points;
    let mut full = Vec::new();
    let mut proj = Vec::new();
    let mut degenerate = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let v = sub(&pts[j], &pts[i]);
            full.push((canonical_direction(&v), [i, j]));
            if v[0].is_zero() && v[1].is_zero() {
                degenerate.push([i, j]);
            } else {
                proj.push((canonical_direction(&v[..2]), [i, j]));
            }
        }
    }
    let parallel_pairs = grouped(&full);
    let mut collinear = Vec::new();
    for [[a, b], [c, d]] in &parallel_pairs {
        let mut t = vec![*a, *b, *c, *d];
        t.sort();
        t.dedup();
        if t.len() == 3 {
            collinear.push([t[0], t[1], t[2]]);
        }
    }
    collinear.sort();
    collinear.dedup();
    Ok(DirectionReport {
        pairs: full.len(),
        unique: parallel_pairs.is_empty(),
        parallel: parallel_pairs,
        parallel_projected: grouped(&proj),
        projection_degenerate: degenerate,
        collinear_triples: collinear,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyze::cloud::Provenance;
    use crate::scalar::int;

    fn cloud(pts: &[&[i64]]) -> PointCloud {
        PointCloud::new(
            pts.iter().map(|p| p.iter().map(|&c| int(c)).collect()).collect(),
            Provenance::External,
        )
        .unwrap()
    }

    #[test]
    fn equal_differences() {
        let rep = direction_report(&cloud(&[&[0, 0], &[1, 0], &[2, 3], &[3, 3]])).unwrap();
        // a parallelogram: both pairs of opposite sides
        assert_eq!(rep.parallel, vec![[[0, 1], [2, 3]], [[0, 2], [1, 3]]]);
        assert!(!rep.unique);
        assert!(rep.collinear_triples.is_empty());
    }

    #[test]
    fn collinear_points() {
        let rep = direction_report(&cloud(&[&[0, 0], &[1, 1], &[3, 3]])).unwrap();
        assert_eq!(rep.parallel.len(), 3);
        assert_eq!(rep.collinear_triples, vec![[0, 1, 2]]);
    }

    #[test]
    fn projection_is_separate() {
        let rep = direction_report(&cloud(&[&[0, 0, 0], &[1, 0, 0], &[0, 1, 5], &[1, 1, 0], &[0, 0, 7]])).unwrap();
        assert!(!rep.parallel.contains(&[[0, 1], [2, 3]]));
        assert!(rep.parallel_projected.contains(&[[0, 1], [2, 3]]));
        assert_eq!(rep.projection_degenerate, vec![[0, 4]]);
    }

    #[test]
    fn canonical_keys_agree_with_minors() {
        let u = vec![int(0), int(-2), int(4)];
        let v = vec![int(0), int(3), int(-6)];
        assert!(parallel(&u, &v));
        assert_eq!(canonical_direction(&u), canonical_direction(&v));
        assert!(!parallel(&u, &[int(1), int(3), int(-6)]));
    }
}
