//! Pairwise squared distances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analyze::cloud::PointCloud;
use crate::geom::dist2;
use crate::scalar::{fmt_rational, rational_sqrt, Rational};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub i: usize,
    pub j: usize,
    pub d2: String,
    /// The distance itself is rational: `d2` is the square of a rational.
    pub rational: bool,
    /// `d2` is on the excluded list.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedDistance {
    pub d2: String,
    pub pairs: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub pairs: Vec<PairDistance>,
    pub distinct: usize,
    pub rational_count: usize,
    pub excluded_hits: usize,
    pub repeated: Vec<RepeatedDistance>,
    /// Every distance is realised by exactly one unordered pair.
    pub unique: bool,
}

pub fn distance_report(cloud: &PointCloud, excluded: &[Rational]) -> DistanceReport {
    let pts = &cloud.points;
    let mut pairs = Vec::new();
    let mut groups: BTreeMap<Rational, Vec<[usize; 2]>> = BTreeMap::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d2 = dist2(&pts[i], &pts[j]);
            pairs.push(PairDistance {
                i,
                j,
                d2: fmt_rational(&d2),
                rational: rational_sqrt(&d2).is_some(),
                excluded: excluded.contains(&d2),
            });
            groups.entry(d2).or_default().push([i, j]);
        }
    }
    let repeated: Vec<RepeatedDistance> = groups
        .iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|(d2, v)| RepeatedDistance {
            d2: fmt_rational(d2),
            pairs: v.clone(),
        })
        .collect();
    DistanceReport {
        distinct: groups.len(),
        rational_count: pairs.iter().filter(|p| p.rational).count(),
        excluded_hits: pairs.iter().filter(|p| p.excluded).count(),
        unique: repeated.is_empty(),
        repeated,
        pairs,
    }
}
