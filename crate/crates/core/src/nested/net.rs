//! Separated nets and the candidate generators used to grow ball trees.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::geom::{dist2, Point};
use crate::scalar::{int, Rational};
use crate::stage::{grid_for_scale, stage_for_grid, Anchor, LatticeStage, StageError};
use crate::RationalPoly;

/// Greedy maximal `h`-separated subset in lexicographic order.
pub fn separated_subset(points: &[Point], h: &Rational) -> Vec<Point> {
    let mut sorted = points.to_vec();
    sorted.sort();
    sorted.dedup();
    separated_sorted(sorted, h, usize::MAX)
}

/// Greedy scan of already sorted points, stopping after `limit` accepted.
pub(crate) fn separated_sorted(sorted: Vec<Point>, h: &Rational, limit: usize) -> Vec<Point> {
    if !h.is_positive() {
        return sorted.into_iter().take(limit).collect();
    }
    let h2 = h * h;
    let cell = |p: &Point| -> Vec<BigInt> { p.iter().map(|c| (c / h).floor().to_integer()).collect() };
    let mut grid: HashMap<Vec<BigInt>, Vec<usize>> = HashMap::new();
    let mut accepted: Vec<Point> = Vec::new();
    for p in sorted {
        if accepted.len() >= limit {
            break;
        }
        let key = cell(&p);
        let n = key.len();
        let mut clear = true;
        'scan: for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let probe: Vec<BigInt> = key
                .iter()
                .map(|k| {
                    let off = (c % 3) as i64 - 1;
                    c /= 3;
                    k + off
                })
                .collect();
            if let Some(ids) = grid.get(&probe) {
                for &i in ids {
                    if dist2(&accepted[i], &p) < h2 {
                        clear = false;
                        break 'scan;
                    }
                }
            }
        }
        if clear {
            grid.entry(key).or_default().push(accepted.len());
            accepted.push(p);
        }
    }
    accepted
}

/// `(c, C) = (8^-n, 8^n)`.
pub fn packing_constants(n: usize) -> (Rational, Rational) {
    let big = (0..n).fold(Rational::one(), |acc, _| acc * int(8));
    (big.recip(), big)
}

/// Supplies candidate net points for one tree level.
pub trait NetGenerator {
    /// Points of an `h`-separated net within closed distance `reach` of
    /// `center`, in lexicographic order, at most `limit` of them.
    fn candidates(
        &self,
        h: &Rational,
        center: &[Rational],
        reach: &Rational,
        limit: usize,
    ) -> Result<Vec<Point>, StageError>;
}

/// The plain lattice `h Z^n`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GridNet;

impl NetGenerator for GridNet {
    fn candidates(
        &self,
        h: &Rational,
        center: &[Rational],
        reach: &Rational,
        limit: usize,
    ) -> Result<Vec<Point>, StageError> {
        let mut out = Vec::new();
        lattice_in_ball(h, &vec![Rational::zero(); center.len()], center, reach, limit, &mut out);
        Ok(out)
    }
}

/// Enumerates `offset + h k` within closed distance `reach` of `center`, in
/// lexicographic order.
pub(crate) fn lattice_in_ball(
    h: &Rational,
    offset: &[Rational],
    center: &[Rational],
    reach: &Rational,
    limit: usize,
    out: &mut Vec<Point>,
) {
    let r2 = reach * reach;
    let mut prefix: Vec<Rational> = Vec::with_capacity(center.len());
    walk(h, offset, center, &r2, Rational::zero(), limit, &mut prefix, out);
}

#[allow(clippy::too_many_arguments)]
fn walk(
    h: &Rational,
    offset: &[Rational],
    center: &[Rational],
    r2: &Rational,
    used: Rational,
    limit: usize,
    prefix: &mut Vec<Rational>,
    out: &mut Vec<Point>,
) {
    let k = prefix.len();
    if k == center.len() {
        out.push(prefix.clone());
        return;
    }
    let left = r2 - &used;
    if left.is_negative() {
        return;
    }
    // |x - c| <= sqrt(left); bracket with a rational square root bound.
    let span = sqrt_upper(&left);
    let lo = ((&center[k] - &span - &offset[k]) / h).floor().to_integer();
    let hi = ((&center[k] + &span - &offset[k]) / h).ceil().to_integer();
    let mut i = lo;
    while i <= hi && out.len() < limit {
        let x = &offset[k] + h * Rational::from_integer(i.clone());
        let dx = &x - &center[k];
        let used2 = &used + &dx * &dx;
        if &used2 <= r2 {
            prefix.push(x);
            walk(h, offset, center, r2, used2, limit, prefix, out);
            prefix.pop();
        }
        i += 1;
    }
}

/// A rational `s >= sqrt(q)` for `q >= 0`.
fn sqrt_upper(q: &Rational) -> Rational {
    if q.is_zero() {
        return Rational::zero();
    }
    let f = crate::scalar::rational_to_f64(q).sqrt() * (1.0 + 1e-9) + f64::MIN_POSITIVE;
    let mut s = Rational::from_float(f).unwrap_or_else(|| q + Rational::one());
    while &(&s * &s) < q {
        s = &s * int(2);
    }
    s
}

/// Members of the shifted-lattice stage of scale `h`, thinned to an
/// `h`-separated net.
#[derive(Debug, Clone)]
pub struct StageNet {
    pub poly: RationalPoly,
    pub anchor: Anchor,
}

impl StageNet {
    pub fn new(poly: RationalPoly, anchor: Anchor) -> Self {
        StageNet { poly, anchor }
    }

    pub fn stage(&self, h: &Rational) -> Result<LatticeStage, StageError> {
        let grid = grid_for_scale(self.anchor.dim(), h);
        let grid = u64::try_from(grid).map_err(|_| StageError::ScaleOutOfRange)?;
        stage_for_grid(&self.poly, &self.anchor, grid)
    }
}

impl NetGenerator for StageNet {
    fn candidates(
        &self,
        h: &Rational,
        center: &[Rational],
        reach: &Rational,
        limit: usize,
    ) -> Result<Vec<Point>, StageError> {
        let stage = self.stage(h)?;
        let pitch = int(stage.grid as i64).recip();
        let zero = vec![Rational::zero(); center.len()];
        let mut raw = Vec::new();
        lattice_in_ball(&pitch, &zero, center, reach, usize::MAX, &mut raw);
        lattice_in_ball(&pitch, &stage.shift, center, reach, usize::MAX, &mut raw);
        raw.retain(|p| stage.contains(p));
        raw.sort();
        raw.dedup();
        Ok(separated_sorted(raw, h, limit))
    }
}
