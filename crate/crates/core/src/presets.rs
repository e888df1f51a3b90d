//! Catalog of forbidden configurations.
//!
//! A [`ConfigurationSpec`] is a system of polynomials in the `n m` coordinates
//! of `m` points together with one affine map per point; an `m`-tuple of
//! distinct points is forbidden when every polynomial vanishes on the mapped
//! tuple.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{flatten, fmt_point, Point};
use crate::poly::PolyError;
use crate::scalar::{approximate_f64, fmt_rational, int, parse_rational, ratio, Rational};
use crate::RationalPoly;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PresetError {
    #[error("unknown preset '{0}'")]
    Unknown(String),
    #[error("bad parameter '{name}': {msg}")]
    BadParam { name: String, msg: String },
    #[error("preset '{name}' does not support n = {n}")]
    Unsupported { name: String, n: usize },
    #[error("polynomial error: {0}")]
    Poly(#[from] PolyError),
}

pub const PRESET_NAMES: [&str; 8] = [
    "right_angle",
    "rational_cos2",
    "angle_pair_equality",
    "collinear",
    "distance",
    "hyperplane",
    "equilateral",
    "similarity",
];

/// Denominator bound for approximated irrational maps.
pub const APPROX_DENOM: u64 = 1_000_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: Vec<Vec<Rational>>,
    pub offset: Vec<Rational>,
    /// `false` for rational approximations of irrational maps.
    pub exact: bool,
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        Self::linear(
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { int(1) } else { int(0) }).collect())
                .collect(),
        )
    }

    pub fn linear(matrix: Vec<Vec<Rational>>) -> Self {
        let n = matrix.len();
        assert!(matrix.iter().all(|r| r.len() == n), "matrix must be square");
        AffineMap {
            matrix,
            offset: vec![Rational::zero(); n],
            exact: true,
        }
    }

    pub fn scaling(n: usize, s: Rational) -> Self {
        let mut m = Self::identity(n);
        m.matrix
            .iter_mut()
            .for_each(|row| row.iter_mut().for_each(|v| *v = &*v * &s));
        m
    }

    /// Rotation of the plane; exact for multiples of 90 degrees, otherwise
    /// cosine and sine are approximated with denominators at most `10^12`.
    pub fn rotation_degrees(deg: f64) -> Self {
        let quarter = deg / 90.0;
        if quarter.fract() == 0.0 {
            let (c, s) = match (quarter as i64).rem_euclid(4) {
                0 => (1, 0),
                1 => (0, 1),
                2 => (-1, 0),
                _ => (0, -1),
            };
            return Self::linear(vec![vec![int(c), int(-s)], vec![int(s), int(c)]]);
        }
        let t = deg.to_radians();
        let c = approximate_f64(t.cos(), APPROX_DENOM);
        let s = approximate_f64(t.sin(), APPROX_DENOM);
        let mut m = Self::linear(vec![vec![c.clone(), -s.clone()], vec![s, c]]);
        m.exact = false;
        m
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn apply(&self, p: &[Rational]) -> Point {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| row.iter().zip(p).fold(b.clone(), |acc, (a, x)| acc + a * x))
            .collect()
    }

    pub fn determinant(&self) -> Rational {
        leibniz(self.dim(), |i, j| self.matrix[i][j].clone(), Rational::zero())
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim())
    }

    /// `self - other`, matrices and offsets.
    pub fn minus(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            matrix: self
                .matrix
                .iter()
                .zip(&other.matrix)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
            offset: self.offset.iter().zip(&other.offset).map(|(x, y)| x - y).collect(),
            exact: self.exact && other.exact,
        }
    }

    pub fn negated(&self) -> AffineMap {
        AffineMap {
            matrix: self.matrix.iter().map(|r| r.iter().map(|v| -v).collect()).collect(),
            offset: self.offset.iter().map(|v| -v).collect(),
            exact: self.exact,
        }
    }

    /// Parses `a,b;c,d` (rows separated by `;`).
    pub fn parse(text: &str) -> Option<AffineMap> {
        let rows: Vec<Vec<Rational>> = text
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|v| parse_rational(v.trim()))
                    .collect::<Option<Vec<_>>>()
            })
            .collect::<Option<_>>()?;
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self::linear(rows))
    }
}

/// Permutations of `0..n` with their signs.
fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    if n == 0 {
        return vec![(Vec::new(), true)];
    }
    let mut out = Vec::new();
    for (perm, even) in permutations(n - 1) {
        // insert n-1 at every position; moving it left k places adds k swaps
        for pos in 0..=perm.len() {
            let mut p = perm.clone();
            p.insert(pos, n - 1);
            let swaps = perm.len() - pos;
            out.push((p, even == (swaps % 2 == 0)));
        }
    }
    out
}

fn leibniz<T>(n: usize, entry: impl Fn(usize, usize) -> T, zero: T) -> T
where
    T: Clone + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<Output = T>,
{
    let mut acc = zero;
    for (perm, even) in permutations(n) {
        let mut term: Option<T> = None;
        for (i, &j) in perm.iter().enumerate() {
            let e = entry(i, j);
            term = Some(match term {
                None => e,
                Some(t) => t * e,
            });
        }
        let term = term.expect("n >= 1");
        acc = if even { acc + term } else { acc - term };
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSpec {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub polys: Vec<RationalPoly>,
    pub maps: Vec<AffineMap>,
    /// Total degree promised by the catalog.
    pub degree: u32,
    pub exact: bool,
    pub degenerate: bool,
    pub params: BTreeMap<String, String>,
    pub witness: Option<Vec<Point>>,
    pub anti_witness: Option<Vec<Point>>,
}

impl ConfigurationSpec {
    fn new(name: &str, n: usize, m: usize, polys: Vec<RationalPoly>, degree: u32) -> Self {
        ConfigurationSpec {
            name: name.to_string(),
            n,
            m,
            polys,
            maps: vec![AffineMap::identity(n); m],
            degree,
            exact: true,
            degenerate: false,
            params: BTreeMap::new(),
            witness: None,
            anti_witness: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n * self.m
    }

    pub fn has_identity_maps(&self) -> bool {
        self.maps.iter().all(AffineMap::is_identity)
    }

    /// The polynomials with the point maps substituted in.
    pub fn composed_polys(&self) -> Vec<RationalPoly> {
        if self.has_identity_maps() {
            return self.polys.clone();
        }
        let nv = self.num_vars();
        let images: Vec<RationalPoly> = (0..self.m)
            .flat_map(|i| {
                let map = &self.maps[i];
                (0..self.n).map(move |j| {
                    (0..self.n).fold(RationalPoly::constant(nv, map.offset[j].clone()), |acc, k| {
                        acc + RationalPoly::var(nv, i * self.n + k).scale(&map.matrix[j][k])
                    })
                })
            })
            .collect();
        self.polys
            .iter()
            .map(|p| p.substitute(&images).expect("images match the variable count"))
            .collect()
    }

    /// Values of the composed system on a tuple.
    pub fn eval(&self, tuple: &[Point]) -> Result<Vec<Rational>, PolyError> {
        let composed = self.composed_polys();
        let flat = flatten(tuple);
        composed.iter().map(|p| p.eval(&flat)).collect()
    }

    /// Values of the plain polynomials on the mapped tuple.
    pub fn eval_mapped(&self, tuple: &[Point]) -> Result<Vec<Rational>, PolyError> {
        let mapped: Vec<Point> = tuple.iter().zip(&self.maps).map(|(p, a)| a.apply(p)).collect();
        let flat = flatten(&mapped);
        self.polys.iter().map(|p| p.eval(&flat)).collect()
    }

    pub fn vanishes_on(&self, tuple: &[Point]) -> Result<bool, PolyError> {
        Ok(self.eval(tuple)?.iter().all(Zero::is_zero))
    }

    /// Largest total degree among the composed polynomials.
    pub fn actual_degree(&self) -> u32 {
        self.composed_polys()
            .iter()
            .filter_map(|p| p.degree().finite())
            .max()
            .unwrap_or(0)
    }

    pub fn summary(&self) -> SpecSummary {
        SpecSummary {
            name: self.name.clone(),
            n: self.n,
            m: self.m,
            degree: self.degree,
            num_polys: self.polys.len(),
            exact: self.exact,
            degenerate: self.degenerate,
            params: self.params.clone(),
            polys: self.composed_polys().iter().map(|p| p.to_string()).collect(),
            witness: self.witness.as_ref().map(|w| w.iter().map(|p| fmt_point(p)).collect()),
            anti_witness: self
                .anti_witness
                .as_ref()
                .map(|w| w.iter().map(|p| fmt_point(p)).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecSummary {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub degree: u32,
    pub num_polys: usize,
    pub exact: bool,
    pub degenerate: bool,
    pub params: BTreeMap<String, String>,
    pub polys: Vec<String>,
    pub witness: Option<Vec<Vec<String>>>,
    pub anti_witness: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSchema {
    pub name: String,
    pub kind: String,
    pub default: String,
    pub constraint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub n_min: usize,
    pub n_max: Option<usize>,
    pub m: Vec<String>,
    pub degree: String,
    pub params: Vec<ParamSchema>,
}

fn schema(name: &str, kind: &str, default: &str, constraint: &str) -> ParamSchema {
    ParamSchema {
        name: name.into(),
        kind: kind.into(),
        default: default.into(),
        constraint: constraint.into(),
    }
}

pub fn catalog() -> Vec<CatalogEntry> {
    let entry = |name: &str, n_min, n_max, m: &[&str], degree: &str, params| CatalogEntry {
        name: name.into(),
        n_min,
        n_max,
        m: m.iter().map(|s| s.to_string()).collect(),
        degree: degree.into(),
        params,
    };
    vec![
        entry("right_angle", 2, None, &["4", "3"], "2", vec![]),
        entry(
            "rational_cos2",
            2,
            None,
            &["3"],
            "4",
            vec![schema("q", "rational", "1/2", "0 <= q <= 1")],
        ),
        entry("angle_pair_equality", 2, None, &["8", "6"], "8", vec![]),
        entry("collinear", 2, None, &["4", "3"], "2", vec![]),
        entry(
            "distance",
            1,
            None,
            &["4", "3", "2"],
            "2 (1 when n = 1)",
            vec![schema("r", "rational", "1", "any rational")],
        ),
        entry("hyperplane", 2, None, &["n+1"], "n", vec![]),
        entry("equilateral", 1, None, &["3"], "2", vec![]),
        entry(
            "similarity",
            1,
            Some(2),
            &["3"],
            "1",
            vec![
                schema("matrix", "rational matrix 'a,b;c,d'", "", "invertible n x n"),
                schema("angle", "degrees", "90 (n = 2)", "rotation angle when no matrix"),
                schema("scale", "rational", "2 (n = 1)", "nonzero"),
            ],
        ),
    ]
}

/// Coordinate `j` of point `i` as a polynomial.
struct Coords {
    n: usize,
    nv: usize,
}

impl Coords {
    fn new(n: usize, m: usize) -> Self {
        Coords { n, nv: n * m }
    }

    fn point(&self, i: usize) -> Vec<RationalPoly> {
        (0..self.n)
            .map(|j| RationalPoly::var(self.nv, i * self.n + j))
            .collect()
    }

    fn diff(&self, a: usize, b: usize) -> Vec<RationalPoly> {
        self.point(a)
            .into_iter()
            .zip(self.point(b))
            .map(|(x, y)| x - y)
            .collect()
    }

    fn dot(&self, u: &[RationalPoly], v: &[RationalPoly]) -> RationalPoly {
        u.iter()
            .zip(v)
            .fold(RationalPoly::zero(self.nv), |acc, (a, b)| acc + a * b)
    }

    fn norm2(&self, u: &[RationalPoly]) -> RationalPoly {
        self.dot(u, u)
    }
}

fn e(n: usize, k: usize, v: Rational) -> Point {
    let mut p = vec![Rational::zero(); n];
    p[k] = v;
    p
}

fn pt2(n: usize, x: i64, y: i64) -> Point {
    let mut p = vec![Rational::zero(); n];
    p[0] = int(x);
    p[1] = int(y);
    p
}

fn pt2q(n: usize, x: Rational, y: Rational) -> Point {
    let mut p = vec![Rational::zero(); n];
    p[0] = x;
    p[1] = y;
    p
}

fn param(params: &BTreeMap<String, String>, key: &str, default: Rational) -> Result<Rational, PresetError> {
    match params.get(key) {
        None => Ok(default),
        Some(text) => parse_rational(text).ok_or_else(|| PresetError::BadParam {
            name: key.into(),
            msg: format!("'{text}' is not a rational"),
        }),
    }
}

fn require_n(name: &str, n: usize, min: usize) -> Result<(), PresetError> {
    if n < min {
        Err(PresetError::Unsupported { name: name.into(), n })
    } else {
        Ok(())
    }
}

/// Squares: rationals `s_1..s_k` with `sum s_i^2 = r`, searched over
/// `M = p q` for `r = p/q`; `None` when none is found.
pub fn rational_squares(r: &Rational, k: usize) -> Option<Vec<Rational>> {
    if r.is_negative() || k == 0 {
        return None;
    }
    let q = r.denom().clone();
    let m = r.numer() * &q;
    let ints = int_squares(&m, k, 2_000_000)?;
    Some(ints.into_iter().map(|s| Rational::new(s, q.clone())).collect())
}

fn int_squares(m: &BigInt, k: usize, budget: usize) -> Option<Vec<BigInt>> {
    let root = m.sqrt();
    if k == 1 {
        return (&root * &root == *m).then(|| vec![root]);
    }
    let mut a = root;
    let mut spent = 0;
    loop {
        let rest = m - &a * &a;
        if let Some(mut tail) = int_squares(&rest, k - 1, budget / 4) {
            tail.insert(0, a);
            return Some(tail);
        }
        spent += 1;
        if a.is_zero() || spent > budget {
            return None;
        }
        a -= 1;
    }
}

pub fn builtin_preset(
    name: &str,
    n: usize,
    params: &BTreeMap<String, String>,
) -> Result<Vec<ConfigurationSpec>, PresetError> {
    if n == 0 {
        return Err(PresetError::Unsupported { name: name.into(), n });
    }
    let mut specs = match name {
        "right_angle" => right_angle(n)?,
        "rational_cos2" => vec![rational_cos2(n, &param(params, "q", ratio(1, 2))?)?],
        "angle_pair_equality" => angle_pair_equality(n)?,
        "collinear" => collinear(n)?,
        "distance" => distance(n, &param(params, "r", int(1))?),
        "hyperplane" => vec![hyperplane(n)?],
        "equilateral" => vec![equilateral(n)],
        "similarity" => vec![similarity_preset(n, &similarity_map(n, params)?)?],
        other => return Err(PresetError::Unknown(other.to_string())),
    };
    for s in &mut specs {
        s.params.extend(params.clone());
    }
    Ok(specs)
}

/// Every preset with default parameters in dimension `n` (skipping those
/// that do not support it).
pub fn all_presets(n: usize) -> Vec<ConfigurationSpec> {
    PRESET_NAMES
        .iter()
        .filter_map(|name| builtin_preset(name, n, &BTreeMap::new()).ok())
        .flatten()
        .collect()
}

fn right_angle(n: usize) -> Result<Vec<ConfigurationSpec>, PresetError> {
    require_n("right_angle", n, 2)?;
    let c4 = Coords::new(n, 4);
    let p1 = c4.dot(&c4.diff(0, 1), &c4.diff(2, 3));
    let mut s1 = ConfigurationSpec::new("right_angle:P1", n, 4, vec![p1], 2);
    s1.witness = Some(vec![pt2(n, 0, 0), pt2(n, 1, 0), pt2(n, 0, 1), pt2(n, 0, 2)]);
    s1.anti_witness = Some(vec![pt2(n, 0, 0), pt2(n, 1, 0), pt2(n, 0, 1), pt2(n, 1, 2)]);
    let c3 = Coords::new(n, 3);
    let p2 = c3.dot(&c3.diff(0, 1), &c3.diff(2, 0));
    let mut s2 = ConfigurationSpec::new("right_angle:P2", n, 3, vec![p2], 2);
    s2.witness = Some(vec![pt2(n, 0, 0), pt2(n, 1, 0), pt2(n, 0, 1)]);
    s2.anti_witness = Some(vec![pt2(n, 0, 0), pt2(n, 1, 0), pt2(n, 1, 1)]);
    Ok(vec![s1, s2])
}

/// `<y-x, z-x>^2 - q |y-x|^2 |z-x|^2`.
pub fn rational_cos2(n: usize, q: &Rational) -> Result<ConfigurationSpec, PresetError> {
    require_n("rational_cos2", n, 2)?;
    if q.is_negative() || q > &int(1) {
        return Err(PresetError::BadParam {
            name: "q".into(),
            msg: "cos^2 must lie in [0, 1]".into(),
        });
    }
    let c = Coords::new(n, 3);
    let (u, v) = (c.diff(1, 0), c.diff(2, 0));
    let dot = c.dot(&u, &v);
    let poly = &dot * &dot - (&c.norm2(&u) * &c.norm2(&v)).scale(q);
    let mut s = ConfigurationSpec::new("rational_cos2", n, 3, vec![poly], 4);
    s.params.insert("q".into(), fmt_rational(q));
    let origin = vec![Rational::zero(); n];
    // y - x = e_1 and z - x = (1, b) with |b|^2 = (1 - q)/q
    let z = if q.is_zero() {
        Some(e(n, 1, int(1)))
    } else if q == &int(1) {
        Some(e(n, 0, int(2)))
    } else {
        rational_squares(&((int(1) - q) / q), n - 1).map(|b| {
            let mut z = vec![int(1)];
            z.extend(b);
            z
        })
    };
    s.witness = z.map(|z| vec![origin.clone(), e(n, 0, int(1)), z]);
    s.anti_witness = [pt2(n, 0, 1), pt2(n, 1, 2), pt2(n, 3, 1)]
        .into_iter()
        .map(|z| vec![origin.clone(), e(n, 0, int(1)), z])
        .find(|t| s.eval(t).is_ok_and(|v| !v[0].is_zero()));
    Ok(s)
}

fn angle_pair_equality(n: usize) -> Result<Vec<ConfigurationSpec>, PresetError> {
    require_n("angle_pair_equality", n, 2)?;
    let c = Coords::new(n, 8);
    let (ab, cd, ef, gh) = (c.diff(0, 1), c.diff(2, 3), c.diff(4, 5), c.diff(6, 7));
    let d1 = c.dot(&ab, &cd);
    let d2 = c.dot(&ef, &gh);
    let p = &(&(&d1 * &d1) * &c.norm2(&ef)) * &c.norm2(&gh) - &(&(&d2 * &d2) * &c.norm2(&ab)) * &c.norm2(&cd);
    let mut sp = ConfigurationSpec::new("angle_pair_equality:P", n, 8, vec![p], 8);
    let base = [(0, 0), (1, 0), (0, 1), (0, 2), (5, 0), (6, 0), (5, 1), (5, 2)];
    let w: Vec<Point> = base.iter().map(|&(x, y)| pt2(n, x, y)).collect();
    let mut anti = w.clone();
    anti[7] = pt2(n, 6, 2);
    sp.witness = Some(w);
    sp.anti_witness = Some(anti);

    let c6 = Coords::new(n, 6);
    let (ab, cb, ef, gf) = (c6.diff(0, 1), c6.diff(2, 1), c6.diff(3, 4), c6.diff(5, 4));
    let d1 = c6.dot(&ab, &cb);
    let d2 = c6.dot(&ef, &gf);
    let q = &(&(&d1 * &d1) * &c6.norm2(&ef)) * &c6.norm2(&gf) - &(&(&d2 * &d2) * &c6.norm2(&ab)) * &c6.norm2(&cb);
    let mut sq = ConfigurationSpec::new("angle_pair_equality:Q", n, 6, vec![q], 8);
    let base = [(1, 0), (0, 0), (0, 1), (6, 0), (5, 0), (5, 1)];
    let w: Vec<Point> = base.iter().map(|&(x, y)| pt2(n, x, y)).collect();
    let mut anti = w.clone();
    anti[5] = pt2(n, 6, 1);
    sq.witness = Some(w);
    sq.anti_witness = Some(anti);
    Ok(vec![sp, sq])
}

fn collinear(n: usize) -> Result<Vec<ConfigurationSpec>, PresetError> {
    require_n("collinear", n, 2)?;
    let c4 = Coords::new(n, 4);
    let (x, y, z, v) = (c4.point(0), c4.point(1), c4.point(2), c4.point(3));
    let p = &(&y[1] - &x[1]) * &(&v[0] - &z[0]) - &(&y[0] - &x[0]) * &(&v[1] - &z[1]);
    let mut sp = ConfigurationSpec::new("collinear:P", n, 4, vec![p], 2);
    sp.witness = Some(vec![pt2(n, 0, 0), pt2(n, 1, 0), pt2(n, 2, 3), pt2(n, 3, 3)]);
    sp.anti_witness = Some(vec![pt2(n, 0, 0), pt2(n, 1, 0), pt2(n, 2, 3), pt2(n, 2, 4)]);
    let c3 = Coords::new(n, 3);
    let (x, y, z) = (c3.point(0), c3.point(1), c3.point(2));
    let q = &(&y[1] - &x[1]) * &(&y[0] - &z[0]) - &(&y[0] - &x[0]) * &(&y[1] - &z[1]);
    let mut sq = ConfigurationSpec::new("collinear:Q", n, 3, vec![q], 2);
    sq.witness = Some(vec![pt2(n, 0, 0), pt2(n, 1, 1), pt2(n, 2, 2)]);
    sq.anti_witness = Some(vec![pt2(n, 0, 0), pt2(n, 1, 0), pt2(n, 0, 1)]);
    Ok(vec![sp, sq])
}

/// `P_r`, `P*_r` and `Q_r`; unsquared differences when `n = 1`.
pub fn distance(n: usize, r: &Rational) -> Vec<ConfigurationSpec> {
    let rs = fmt_rational(r);
    let (c4, c3, c2) = (Coords::new(n, 4), Coords::new(n, 3), Coords::new(n, 2));
    let (p, ps, q, degree) = if n == 1 {
        let v = |c: &Coords, i| c.point(i).remove(0);
        (
            (v(&c4, 0) - v(&c4, 1)) - (v(&c4, 2) - v(&c4, 3)) - RationalPoly::constant(4, r.clone()),
            (v(&c3, 0) - v(&c3, 1)) - (v(&c3, 1) - v(&c3, 2)) - RationalPoly::constant(3, r.clone()),
            (v(&c2, 0) - v(&c2, 1)) - RationalPoly::constant(2, r.clone()),
            1,
        )
    } else {
        (
            c4.norm2(&c4.diff(0, 1)) - c4.norm2(&c4.diff(2, 3)) - RationalPoly::constant(4 * n, r.clone()),
            c3.norm2(&c3.diff(0, 1)) - c3.norm2(&c3.diff(2, 1)) - RationalPoly::constant(3 * n, r.clone()),
            c2.norm2(&c2.diff(0, 1)) - RationalPoly::constant(2 * n, r.clone()),
            2,
        )
    };
    let mut sp = ConfigurationSpec::new("distance:P", n, 4, vec![p], degree);
    let mut sps = ConfigurationSpec::new("distance:Pstar", n, 3, vec![ps], degree);
    let mut sq = ConfigurationSpec::new("distance:Q", n, 2, vec![q], degree);
    for s in [&mut sp, &mut sps, &mut sq] {
        s.params.insert("r".into(), rs.clone());
    }
    let first = |v: Rational| e(n, 0, v);
    if n == 1 {
        // a - b = s, c - d = s - r
        sp.witness = [1, 2, 3]
            .into_iter()
            .map(|s| {
                vec![
                    first(int(s)),
                    first(int(0)),
                    first(int(100) + int(s) - r),
                    first(int(100)),
                ]
            })
            .find(|t| distinct(t));
        // b = 0, a = p, c = -t with p - t = r
        sps.witness = [1, 3, 5]
            .into_iter()
            .map(|t| vec![first(r + int(t)), first(int(0)), first(int(-t))])
            .find(|t| distinct(t));
        sq.witness = (!r.is_zero()).then(|| vec![first(r.clone()), first(int(0))]);
    } else {
        // |a-b|^2 - |c-d|^2 = p^2 - q^2 = r with p - q = t, p + q = r / t
        let pq = [int(1), int(2), int(3)]
            .into_iter()
            .map(|t| {
                let s = r / &t;
                ((&s + &t) / int(2), (&s - &t) / int(2))
            })
            .find(|(p, q)| !p.is_zero() && !q.is_zero());
        if let Some((p, q)) = pq {
            sp.witness = Some(vec![
                pt2(n, 0, 0),
                pt2q(n, -p.clone(), int(0)),
                pt2(n, 0, 1),
                pt2q(n, -q.clone(), int(1)),
            ]);
            sps.witness = Some(vec![pt2q(n, p, int(0)), pt2(n, 0, 0), pt2q(n, int(0), q)]).filter(|t| distinct(t));
        }
        sq.witness = rational_squares(r, n)
            .filter(|_| r.is_positive())
            .map(|a| vec![a, vec![Rational::zero(); n]]);
    }
    for s in [&mut sp, &mut sps, &mut sq] {
        s.anti_witness = anti_witness(s);
    }
    vec![sp, sps, sq]
}

/// First nonzero tuple among a few small integer tuples.
fn anti_witness(s: &ConfigurationSpec) -> Option<Vec<Point>> {
    (0..64i64).find_map(|seed| {
        let t: Vec<Point> = (0..s.m)
            .map(|i| {
                (0..s.n)
                    .map(|j| int(((i as i64 + 1) * (j as i64 + 2) * (seed + 3)).pow(2) % 17 + i as i64))
                    .collect()
            })
            .collect();
        let ok = distinct(&t) && s.eval(&t).is_ok_and(|v| v.iter().any(|x| !x.is_zero()));
        ok.then_some(t)
    })
}

fn distinct(t: &[Point]) -> bool {
    (0..t.len()).all(|i| (i + 1..t.len()).all(|j| t[i] != t[j]))
}

/// `det(x_1 - x_0, .., x_n - x_0)` for `n + 1` points of `R^n`.
fn hyperplane(n: usize) -> Result<ConfigurationSpec, PresetError> {
    require_n("hyperplane", n, 2)?;
    let c = Coords::new(n, n + 1);
    let rows: Vec<Vec<RationalPoly>> = (1..=n).map(|i| c.diff(i, 0)).collect();
    let det = leibniz(n, |i, j| rows[i][j].clone(), RationalPoly::zero(c.nv));
    let mut s = ConfigurationSpec::new("hyperplane", n, n + 1, vec![det], n as u32);
    let mut w: Vec<Point> = vec![vec![Rational::zero(); n]];
    w.extend((1..n).map(|k| e(n, k - 1, int(1))));
    let mut anti = w.clone();
    w.push(e(n, 0, int(2)));
    anti.push(e(n, n - 1, int(1)));
    s.witness = Some(w);
    s.anti_witness = Some(anti);
    Ok(s)
}

/// `<y - x, z - (x + y)/2>`.
fn equilateral(n: usize) -> ConfigurationSpec {
    let c = Coords::new(n, 3);
    let (x, y, z) = (c.point(0), c.point(1), c.point(2));
    let half = ratio(1, 2);
    let mid: Vec<RationalPoly> = z
        .iter()
        .zip(x.iter().zip(&y))
        .map(|(zi, (xi, yi))| zi - &(xi + yi).scale(&half))
        .collect();
    let poly = c.dot(&c.diff(1, 0), &mid);
    let mut s = ConfigurationSpec::new("equilateral", n, 3, vec![poly], 2);
    if n == 1 {
        s.witness = Some(vec![vec![int(0)], vec![int(2)], vec![int(1)]]);
        s.anti_witness = Some(vec![vec![int(0)], vec![int(2)], vec![int(5)]]);
    } else {
        s.witness = Some(vec![pt2(n, 0, 0), pt2(n, 2, 0), pt2(n, 1, 5)]);
        s.anti_witness = Some(vec![pt2(n, 0, 0), pt2(n, 2, 0), pt2(n, 0, 5)]);
    }
    s
}

fn similarity_map(n: usize, params: &BTreeMap<String, String>) -> Result<AffineMap, PresetError> {
    if let Some(text) = params.get("matrix") {
        let a = AffineMap::parse(text).ok_or_else(|| PresetError::BadParam {
            name: "matrix".into(),
            msg: format!("cannot parse '{text}'"),
        })?;
        if a.dim() != n {
            return Err(PresetError::BadParam {
                name: "matrix".into(),
                msg: format!("expected {n} x {n}"),
            });
        }
        return Ok(a);
    }
    if n == 2 {
        let deg = match params.get("angle") {
            None => 90.0,
            Some(t) => t.parse::<f64>().map_err(|_| PresetError::BadParam {
                name: "angle".into(),
                msg: format!("'{t}' is not a number"),
            })?,
        };
        let mut a = AffineMap::rotation_degrees(deg);
        if params.contains_key("scale") {
            let k = param(params, "scale", int(1))?;
            a.matrix.iter_mut().flatten().for_each(|v| *v = &*v * &k);
        }
        return Ok(a);
    }
    Ok(AffineMap::scaling(n, param(params, "scale", int(2))?))
}

/// Triangles `(a, b, c)` with `c - a = A (b - a)`, written as
/// `(A - I) a - A b + c = 0` through the maps `(A - I, -A, I)`.
pub fn similarity_preset(n: usize, a: &AffineMap) -> Result<ConfigurationSpec, PresetError> {
    if !(1..=2).contains(&n) {
        return Err(PresetError::Unsupported {
            name: "similarity".into(),
            n,
        });
    }
    if a.dim() != n || a.determinant().is_zero() {
        return Err(PresetError::BadParam {
            name: "matrix".into(),
            msg: "A must be an invertible n x n matrix".into(),
        });
    }
    let c = Coords::new(n, 3);
    let polys: Vec<RationalPoly> = (0..n)
        .map(|j| &(&c.point(0)[j] + &c.point(1)[j]) + &c.point(2)[j])
        .collect();
    let mut s = ConfigurationSpec::new("similarity", n, 3, polys, 1);
    let id = AffineMap::identity(n);
    s.maps = vec![a.minus(&id), a.negated(), id];
    s.exact = a.exact;
    s.degenerate = a.is_identity();
    s.params.insert(
        "matrix".into(),
        a.matrix
            .iter()
            .map(|r| r.iter().map(fmt_rational).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join(";"),
    );
    let origin = vec![Rational::zero(); n];
    let b = e(n, 0, int(1));
    let w = vec![origin.clone(), b.clone(), a.apply(&b)];
    if distinct(&w) && s.vanishes_on(&w).unwrap_or(false) {
        s.witness = Some(w);
    }
    let mut anti = vec![origin, b.clone(), a.apply(&b)];
    anti[2][n - 1] += int(1);
    if distinct(&anti) {
        s.anti_witness = Some(anti);
    } else {
        s.anti_witness = anti_witness(&s);
    }
    Ok(s)
}

/// Degree of every composed polynomial of a spec list, for reporting.
pub fn degrees(specs: &[ConfigurationSpec]) -> Vec<u32> {
    specs.iter().map(ConfigurationSpec::actual_degree).collect()
}

/// Largest denominator among the matrix entries.
pub fn max_denominator(a: &AffineMap) -> u64 {
    a.matrix
        .iter()
        .flatten()
        .map(|v| v.denom().to_u64().unwrap_or(u64::MAX))
        .max()
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_params() -> BTreeMap<String, String> {
        BTreeMap::new()
    }

    #[test]
    fn right_angle_shapes() {
        let specs = builtin_preset("right_angle", 2, &no_params()).unwrap();
        assert_eq!(degrees(&specs), vec![2, 2]);
        let vars: Vec<usize> = specs.iter().map(|s| s.polys[0].num_vars()).collect();
        assert_eq!(vars, vec![8, 6]);
    }

    #[test]
    fn cos2_example() {
        let s = rational_cos2(2, &ratio(1, 2)).unwrap();
        let t = vec![pt2(2, 0, 0), pt2(2, 1, 1), pt2(2, 1, 0)];
        assert_eq!(s.eval(&t).unwrap(), vec![int(0)]);
        assert!(rational_cos2(2, &ratio(3, 2)).is_err());
    }

    #[test]
    fn cos2_witness_search() {
        // cos^2 = 1/5: |b|^2 = 4, b = 2
        let s = rational_cos2(2, &ratio(1, 5)).unwrap();
        assert!(s.vanishes_on(s.witness.as_ref().unwrap()).unwrap());
        // cos^2 = 1/3 needs |b|^2 = 2: impossible in the plane, possible in 3-space
        assert!(rational_cos2(2, &ratio(1, 3)).unwrap().witness.is_none());
        let s3 = rational_cos2(3, &ratio(1, 3)).unwrap();
        assert!(s3.vanishes_on(s3.witness.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn isosceles_example() {
        let specs = distance(2, &int(0));
        let ps = &specs[1];
        let t = vec![pt2(2, 0, 0), pt2(2, 1, 0), pt2(2, 2, 0)];
        assert_eq!(ps.eval(&t).unwrap(), vec![int(0)]);
    }

    #[test]
    fn distance_degrees_by_dimension() {
        assert_eq!(degrees(&distance(1, &int(1))), vec![1, 1, 1]);
        assert_eq!(degrees(&distance(3, &int(1))), vec![2, 2, 2]);
    }

    #[test]
    fn rotation_similarity_example() {
        let s = similarity_preset(2, &AffineMap::rotation_degrees(90.0)).unwrap();
        let t = vec![pt2(2, 0, 0), pt2(2, 1, 0), pt2(2, 0, 1)];
        assert!(s.vanishes_on(&t).unwrap());
        assert!(s.exact && !s.degenerate);
        assert_eq!(s.polys.len(), 2);
    }

    #[test]
    fn scaling_similarity_example() {
        let s = similarity_preset(1, &AffineMap::scaling(1, int(2))).unwrap();
        let t = vec![vec![int(0)], vec![int(1)], vec![int(2)]];
        assert!(s.vanishes_on(&t).unwrap());
    }

    #[test]
    fn identity_similarity_is_degenerate() {
        let s = similarity_preset(2, &AffineMap::identity(2)).unwrap();
        assert!(s.degenerate);
        assert!(s.witness.is_none());
        // vanishes exactly when c = b
        let t = vec![pt2(2, 0, 0), pt2(2, 1, 3), pt2(2, 1, 3)];
        assert!(s.vanishes_on(&t).unwrap());
        assert!(similarity_preset(3, &AffineMap::identity(3)).is_err());
    }

    #[test]
    fn irrational_rotation_is_inexact() {
        let a = AffineMap::rotation_degrees(60.0);
        assert!(!a.exact);
        assert!(max_denominator(&a) <= APPROX_DENOM);
        let s = similarity_preset(2, &a).unwrap();
        assert!(!s.exact);
    }

    #[test]
    fn hyperplane_degree_and_witness() {
        for n in 2..=4 {
            let s = hyperplane(n).unwrap();
            assert_eq!(s.actual_degree(), n as u32);
            assert_eq!(s.num_vars(), n * (n + 1));
            assert!(s.vanishes_on(s.witness.as_ref().unwrap()).unwrap());
            assert!(!s.vanishes_on(s.anti_witness.as_ref().unwrap()).unwrap());
        }
    }

    #[test]
    fn determinant_matches_hand_value() {
        let a = AffineMap::parse("1,2;3,4").unwrap();
        assert_eq!(a.determinant(), int(-2));
        let b = AffineMap::parse("2,0,1;1,3,2;1,1,2").unwrap();
        assert_eq!(b.determinant(), int(6));
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn unknown_and_unsupported() {
        assert_eq!(
            builtin_preset("pentagon", 2, &no_params()),
            Err(PresetError::Unknown("pentagon".into()))
        );
        assert!(matches!(
            builtin_preset("right_angle", 1, &no_params()),
            Err(PresetError::Unsupported { .. })
        ));
        let mut p = no_params();
        p.insert("q".into(), "abc".into());
        assert!(matches!(
            builtin_preset("rational_cos2", 2, &p),
            Err(PresetError::BadParam { .. })
        ));
    }

    #[test]
    fn squares_search() {
        let s = rational_squares(&ratio(25, 4), 2).unwrap();
        assert_eq!(s.iter().map(|v| v * v).fold(int(0), |a, b| a + b), ratio(25, 4));
        assert!(rational_squares(&int(3), 2).is_none());
        assert!(rational_squares(&int(7), 4).is_some());
    }

    #[test]
    fn catalog_lists_every_preset() {
        let names: Vec<String> = catalog().into_iter().map(|c| c.name).collect();
        assert_eq!(names, PRESET_NAMES.to_vec());
        let json = serde_json::to_string(&catalog()).unwrap();
        assert!(json.contains("rational_cos2"));
    }
}
