//! Exhaustive exact search for forbidden tuples in a point cloud.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analyze::cloud::PointCloud;
use crate::analyze::AnalyzeError;
use crate::geom::{flatten, BoundingBox, Point};
use crate::interval::Interval;
use crate::presets::ConfigurationSpec;
use crate::scalar::{fmt_rational, lcm_denominators, Rational};
use crate::RationalPoly;

/// Values within this distance of zero count as hits for approximate specs.
pub const APPROX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub spec: String,
    pub indices: Vec<usize>,
    /// One value per polynomial of the system, as `p/q`.
    pub values: Vec<String>,
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub spec: String,
    pub n: usize,
    pub m: usize,
    pub points: usize,
    pub pruning: bool,
    pub exact: bool,
    pub tolerance: Option<f64>,
    /// Ordered tuples of distinct points.
    pub tuples_total: String,
    pub tuples_evaluated: u64,
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Integer form of a polynomial after scaling coordinates by a common
/// denominator: `sum c_m X^m` with `X = D x`.
struct IntPoly {
    terms: Vec<(i128, Vec<u32>)>,
}

impl IntPoly {
    fn new(p: &RationalPoly, d: &BigInt) -> Option<IntPoly> {
        let (q, _) = p.clear_denominators();
        let deg = q.degree().finite().unwrap_or(0);
        let mut terms = Vec::with_capacity(q.num_terms());
        for (m, c) in q.terms() {
            let lift = num_traits::pow(d.clone(), (deg - m.degree()) as usize);
            let c = (c.numer() * lift).to_i128()?;
            terms.push((c, m.exponents().to_vec()));
        }
        Some(IntPoly { terms })
    }

    /// `None` on overflow.
    fn is_zero_at(&self, x: &[i128]) -> Option<bool> {
        let mut acc: i128 = 0;
        for (c, exps) in &self.terms {
            let mut t = *c;
            for (v, &e) in x.iter().zip(exps) {
                for _ in 0..e {
                    t = t.checked_mul(*v)?;
                }
            }
            acc = acc.checked_add(t)?;
        }
        Some(acc == 0)
    }
}

struct Evaluator<'a> {
    spec: &'a ConfigurationSpec,
    polys: Vec<RationalPoly>,
    int_polys: Option<Vec<IntPoly>>,
    int_points: Vec<Vec<i128>>,
    tol: Rational,
}

impl<'a> Evaluator<'a> {
    fn new(spec: &'a ConfigurationSpec, cloud: &PointCloud) -> Self {
        let polys = spec.composed_polys();
        let mut int_points = Vec::new();
        let mut int_polys = None;
        if spec.exact {
            let d = lcm_denominators(cloud.points.iter().flatten());
            let scaled: Option<Vec<Vec<i128>>> = cloud
                .points
                .iter()
                .map(|p| p.iter().map(|c| (c.numer() * (&d / c.denom())).to_i128()).collect())
                .collect();
            if let Some(s) = scaled {
                int_polys = polys.iter().map(|p| IntPoly::new(p, &d)).collect();
                int_points = s;
            }
        }
        Evaluator {
            spec,
            polys,
            int_polys,
            int_points,
            tol: Rational::from_float(APPROX_TOLERANCE).expect("finite"),
        }
    }

    fn hit(&self, cloud: &PointCloud, idx: &[usize]) -> Option<Violation> {
        if let Some(ip) = &self.int_polys {
            let x: Vec<i128> = idx.iter().flat_map(|&i| self.int_points[i].iter().copied()).collect();
            let mut decided = true;
            for p in ip {
                match p.is_zero_at(&x) {
                    Some(false) => return None,
                    Some(true) => {}
                    None => decided = false,
                }
            }
            if decided {
                return Some(Violation {
                    spec: self.spec.name.clone(),
                    indices: idx.to_vec(),
                    values: vec!["0".to_string(); self.polys.len()],
                    approximate: false,
                });
            }
        }
        let tuple: Vec<Point> = idx.iter().map(|&i| cloud.points[i].clone()).collect();
        let flat = flatten(&tuple);
        let mut values = Vec::with_capacity(self.polys.len());
        for p in &self.polys {
            let v = p.eval(&flat).expect("arity checked");
            let ok = if self.spec.exact {
                v.is_zero()
            } else {
                v.abs() <= self.tol
            };
            if !ok {
                return None;
            }
            values.push(v);
        }
        Some(Violation {
            spec: self.spec.name.clone(),
            indices: idx.to_vec(),
            values: values.iter().map(fmt_rational).collect(),
            approximate: !self.spec.exact,
        })
    }

    /// Certified: some polynomial stays away from zero on the box.
    fn excluded(&self, domain: &[Interval<Rational>]) -> bool {
        self.polys.iter().any(|p| {
            let r = p.eval_interval(domain).expect("arity checked");
            if self.spec.exact {
                !r.contains_zero()
            } else {
                r.lo > self.tol || r.hi < -self.tol.clone()
            }
        })
    }
}

fn falling_factorial(k: usize, m: usize) -> BigInt {
    (0..m).fold(BigInt::one(), |acc, i| acc * BigInt::from(k.saturating_sub(i)))
}

/// Every ordered tuple of distinct points on which the whole polynomial
/// system vanishes (or is within [`APPROX_TOLERANCE`] for approximate specs).
///
/// With `pruning` the cloud is bucketed into cells and whole blocks of tuples
/// are skipped when interval arithmetic shows some polynomial is nonzero on
/// the product of the cells' exact bounding boxes. The result is identical.
pub fn verify_exclusion(
    cloud: &PointCloud,
    spec: &ConfigurationSpec,
    pruning: bool,
) -> Result<VerifyReport, AnalyzeError> {
    if cloud.n != spec.n {
        return Err(AnalyzeError::DimensionMismatch {
            expected: spec.n,
            got: cloud.n,
        });
    }
    let eval = Evaluator::new(spec, cloud);
    let m = spec.m;
    let k = cloud.len();
    let (mut violations, evaluated) = if m > k {
        (Vec::new(), 0)
    } else if pruning {
        pruned_search(cloud, &eval, m)
    } else {
        plain_search(cloud, &eval, m)
    };
    violations.sort_by(|a, b| a.indices.cmp(&b.indices));
    Ok(VerifyReport {
        spec: spec.name.clone(),
        n: spec.n,
        m,
        points: k,
        pruning,
        exact: spec.exact,
        tolerance: (!spec.exact).then_some(APPROX_TOLERANCE),
        tuples_total: falling_factorial(k, m).to_string(),
        tuples_evaluated: evaluated,
        violations,
    })
}

/// Like [`verify_exclusion`], but only over tuples taking the `i`-th point
/// from `groups[i]` (indices into the cloud), in group order. For a stage
/// these are the tuples with one point per anchor ball.
pub fn verify_transversals(
    cloud: &PointCloud,
    groups: &[Vec<usize>],
    spec: &ConfigurationSpec,
) -> Result<VerifyReport, AnalyzeError> {
    if cloud.n != spec.n {
        return Err(AnalyzeError::DimensionMismatch {
            expected: spec.n,
            got: cloud.n,
        });
    }
    if groups.len() != spec.m {
        return Err(AnalyzeError::GroupCount {
            expected: spec.m,
            got: groups.len(),
        });
    }
    if let Some(&bad) = groups.iter().flatten().find(|&&i| i >= cloud.len()) {
        return Err(AnalyzeError::BadIndex(bad));
    }
    let eval = Evaluator::new(spec, cloud);
    let mut violations = Vec::new();
    let mut evaluated = 0u64;
    let mut idx = Vec::with_capacity(spec.m);
    extend_groups(cloud, &eval, groups, &mut idx, &mut violations, &mut evaluated);
    let total = groups.iter().fold(BigInt::one(), |acc, g| acc * BigInt::from(g.len()));
    Ok(VerifyReport {
        spec: spec.name.clone(),
        n: spec.n,
        m: spec.m,
        points: cloud.len(),
        pruning: false,
        exact: spec.exact,
        tolerance: (!spec.exact).then_some(APPROX_TOLERANCE),
        tuples_total: total.to_string(),
        tuples_evaluated: evaluated,
        violations,
    })
}

fn extend_groups(
    cloud: &PointCloud,
    eval: &Evaluator,
    groups: &[Vec<usize>],
    idx: &mut Vec<usize>,
    out: &mut Vec<Violation>,
    count: &mut u64,
) {
    let Some(group) = groups.get(idx.len()) else {
        *count += 1;
        if let Some(v) = eval.hit(cloud, idx) {
            out.push(v);
        }
        return;
    };
    for &j in group {
        if !idx.contains(&j) {
            idx.push(j);
            extend_groups(cloud, eval, groups, idx, out, count);
            idx.pop();
        }
    }
}

fn plain_search(cloud: &PointCloud, eval: &Evaluator, m: usize) -> (Vec<Violation>, u64) {
    let k = cloud.len();
    let parts: Vec<(Vec<Violation>, u64)> = (0..k)
        .into_par_iter()
        .map(|first| {
            let mut out = Vec::new();
            let mut count = 0u64;
            let mut idx = vec![first];
            extend_plain(cloud, eval, m, k, &mut idx, &mut out, &mut count);
            (out, count)
        })
        .collect();
    merge(parts)
}

fn extend_plain(
    cloud: &PointCloud,
    eval: &Evaluator,
    m: usize,
    k: usize,
    idx: &mut Vec<usize>,
    out: &mut Vec<Violation>,
    count: &mut u64,
) {
    if idx.len() == m {
        *count += 1;
        if let Some(v) = eval.hit(cloud, idx) {
            out.push(v);
        }
        return;
    }
    for j in 0..k {
        if !idx.contains(&j) {
            idx.push(j);
            extend_plain(cloud, eval, m, k, idx, out, count);
            idx.pop();
        }
    }
}

fn merge(parts: Vec<(Vec<Violation>, u64)>) -> (Vec<Violation>, u64) {
    let mut all = Vec::new();
    let mut total = 0;
    for (v, c) in parts {
        all.extend(v);
        total += c;
    }
    (all, total)
}

struct Cell {
    members: Vec<usize>,
    bounds: Vec<Interval<Rational>>,
}

/// Buckets points into about `len/2` grid cells over the cloud's bounding box.
fn cells(cloud: &PointCloud) -> Vec<Cell> {
    let bb = cloud.bounding_box();
    let n = cloud.n;
    let target = (cloud.len() as f64 / 2.0).max(1.0);
    let per_axis = target.powf(1.0 / n as f64).ceil().max(1.0) as i64;
    let mut buckets: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let key = (0..n)
            .map(|a| {
                let w = &bb.hi[a] - &bb.lo[a];
                if w.is_zero() {
                    return 0;
                }
                let t = (&p[a] - &bb.lo[a]) / w * Rational::from_integer(per_axis.into());
                t.floor().to_integer().to_i64().unwrap_or(0).min(per_axis - 1)
            })
            .collect();
        buckets.entry(key).or_default().push(i);
    }
    buckets
        .into_values()
        .map(|members| {
            let pts: Vec<Point> = members.iter().map(|&i| cloud.points[i].clone()).collect();
            let b = BoundingBox::enclosing(&pts).expect("cells are nonempty");
            Cell {
                members,
                bounds: b.lo.into_iter().zip(b.hi).map(|(l, h)| Interval::new(l, h)).collect(),
            }
        })
        .collect()
}

fn pruned_search(cloud: &PointCloud, eval: &Evaluator, m: usize) -> (Vec<Violation>, u64) {
    let cells = cells(cloud);
    let bb = cloud.bounding_box();
    let whole: Vec<Interval<Rational>> = bb.lo.into_iter().zip(bb.hi).map(|(l, h)| Interval::new(l, h)).collect();
    let parts: Vec<(Vec<Violation>, u64)> = (0..cells.len())
        .into_par_iter()
        .map(|first| {
            let mut out = Vec::new();
            let mut count = 0u64;
            let mut chosen = vec![first];
            extend_cells(cloud, eval, &cells, &whole, m, &mut chosen, &mut out, &mut count);
            (out, count)
        })
        .collect();
    merge(parts)
}

#[allow(clippy::too_many_arguments)]
fn extend_cells(
    cloud: &PointCloud,
    eval: &Evaluator,
    cells: &[Cell],
    whole: &[Interval<Rational>],
    m: usize,
    chosen: &mut Vec<usize>,
    out: &mut Vec<Violation>,
    count: &mut u64,
) {
    let mut domain = Vec::with_capacity(m * cloud.n);
    for slot in 0..m {
        match chosen.get(slot) {
            Some(&c) => domain.extend(cells[c].bounds.iter().cloned()),
            None => domain.extend(whole.iter().cloned()),
        }
    }
    if eval.excluded(&domain) {
        return;
    }
    if chosen.len() == m {
        let mut idx = Vec::with_capacity(m);
        tuples_in_cells(cloud, eval, cells, chosen, &mut idx, out, count);
        return;
    }
    for c in 0..cells.len() {
        chosen.push(c);
        extend_cells(cloud, eval, cells, whole, m, chosen, out, count);
        chosen.pop();
    }
}

fn tuples_in_cells(
    cloud: &PointCloud,
    eval: &Evaluator,
    cells: &[Cell],
    chosen: &[usize],
    idx: &mut Vec<usize>,
    out: &mut Vec<Violation>,
    count: &mut u64,
) {
    if idx.len() == chosen.len() {
        *count += 1;
        if let Some(v) = eval.hit(cloud, idx) {
            out.push(v);
        }
        return;
    }
    for &i in &cells[chosen[idx.len()]].members {
        if !idx.contains(&i) {
            idx.push(i);
            tuples_in_cells(cloud, eval, cells, chosen, idx, out, count);
            idx.pop();
        }
    }
}
