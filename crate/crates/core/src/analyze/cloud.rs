//! Finite point clouds with exact rational coordinates.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{fmt_point, BoundingBox, Point};
use crate::scalar::{parse_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Grid,
    Stage,
    TreeSample,
    External,
}

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("points {first} and {second} coincide")]
    Duplicate { first: usize, second: usize },
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty cloud")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub n: usize,
    pub points: Vec<Point>,
    pub provenance: Provenance,
}

impl PointCloud {
    pub fn new(points: Vec<Point>, provenance: Provenance) -> Result<Self, CloudError> {
        let n = points.first().ok_or(CloudError::Empty)?.len();
        let mut seen: HashMap<&Point, usize> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            if p.len() != n {
                return Err(CloudError::DimensionMismatch {
                    index: i,
                    expected: n,
                    got: p.len(),
                });
            }
            if let Some(&first) = seen.get(p) {
                return Err(CloudError::Duplicate { first, second: i });
            }
            seen.insert(p, i);
        }
        Ok(PointCloud { n, points, provenance })
    }

    /// Drops repeated points, keeping first occurrences.
    pub fn dedup(points: Vec<Point>, provenance: Provenance) -> Result<Self, CloudError> {
        let mut seen = std::collections::HashSet::new();
        let kept = points.into_iter().filter(|p| seen.insert(p.clone())).collect();
        Self::new(kept, provenance)
    }

    /// Merges point groups (such as the balls of a stage) into one cloud,
    /// returning each group as indices into it.
    pub fn from_groups(groups: &[Vec<Point>], provenance: Provenance) -> Result<(Self, Vec<Vec<usize>>), CloudError> {
        let mut index: HashMap<Point, usize> = HashMap::new();
        let mut points = Vec::new();
        let ids = groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|p| {
                        *index.entry(p.clone()).or_insert_with(|| {
                            points.push(p.clone());
                            points.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        Ok((Self::new(points, provenance)?, ids))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::enclosing(&self.points).expect("clouds are nonempty")
    }

    /// Reads rows of `p/q` coordinates. A header row is skipped, and a
    /// leading `ball_index` column (as written by stage export) is dropped.
    pub fn read_csv<R: Read>(reader: R, provenance: Provenance) -> Result<Self, CloudError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(reader);
        let mut points = Vec::new();
        let mut skip_first_col = false;
        for (idx, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
            if idx == 0 && rec.iter().any(|f| parse_rational(f).is_none()) {
                skip_first_col = rec.get(0) == Some("ball_index");
                continue;
            }
            let fields: Vec<&str> = rec.iter().skip(usize::from(skip_first_col)).collect();
            let p: Option<Point> = fields.iter().map(|f| parse_rational(f)).collect();
            match p {
                Some(p) if !p.is_empty() => points.push(p),
                _ => {
                    return Err(CloudError::Parse {
                        line,
                        msg: format!("cannot parse row {:?}", fields),
                    })
                }
            }
        }
        Self::new(points, provenance)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), CloudError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((0..self.n).map(|k| format!("coord_{k}")))?;
        for p in &self.points {
            w.write_record(fmt_point(p))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn translated(&self, v: &[Rational]) -> PointCloud {
        PointCloud {
            n: self.n,
            points: self.points.iter().map(|p| crate::geom::add(p, v)).collect(),
            provenance: self.provenance,
        }
    }

    pub fn scaled(&self, s: &Rational) -> PointCloud {
        PointCloud {
            n: self.n,
            points: self.points.iter().map(|p| p.iter().map(|c| c * s).collect()).collect(),
            provenance: self.provenance,
        }
    }
}

/// Integer grid `{0..k-1}^n`.
pub fn integer_grid(k: i64, n: usize) -> PointCloud {
    let mut points: Vec<Point> = vec![Vec::new()];
    for _ in 0..n {
        points = points
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |v| {
                    let mut q = p.clone();
                    q.push(Rational::from_integer(v.into()));
                    q
                })
            })
            .collect();
    }
    PointCloud::new(points, Provenance::Grid).expect("grid points are distinct")
}
