//! Scale schedules `h_1 > h_2 > ..` and their admissibility conditions.
//!
//! Levels are stored as `L = ln(-ln h)`, which stays finite for the
//! double-exponential decay that strict schedules require.

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{fmt_rational, int, ln_abs, ratio, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    Strict,
    Relaxed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    /// Exact value when representable.
    pub h: Option<Rational>,
    /// `ln(-ln h)`.
    pub ln_neg_ln_h: f64,
}

impl Level {
    pub fn exact(h: Rational) -> Self {
        assert!(h.is_positive() && h < Rational::one(), "scale must lie in (0, 1)");
        let ln_neg_ln_h = (-ln_abs(&h)).ln();
        Level {
            h: Some(h),
            ln_neg_ln_h,
        }
    }

    pub fn from_log(ln_neg_ln_h: f64) -> Self {
        Level { h: None, ln_neg_ln_h }
    }

    /// `ln h`, possibly `-inf` once the level leaves the f64 range.
    pub fn ln_h(&self) -> f64 {
        -self.ln_neg_ln_h.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub n: usize,
    pub d: u32,
    pub mode: ScheduleMode,
    pub levels: Vec<Level>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("schedule needs at least one level")]
    Empty,
    #[error("relaxed ratio must lie in (0, 1)")]
    BadRatio,
    #[error("n and d must be positive")]
    BadDimension,
}

/// First level of every generated schedule.
pub fn first_scale() -> Rational {
    ratio(1, 10)
}

/// Smallest `ln(-ln h_j)` allowed by `h_j <= h_{j-1}^{d+1} / 6`.
fn power_decay_requirement(prev: &Level, d: u32) -> f64 {
    // -ln h_j >= (d+1)(-ln h_{j-1}) + ln 6
    let base = prev.ln_neg_ln_h + ((d + 1) as f64).ln();
    let tail = 6f64.ln() / ((d + 1) as f64 * prev.ln_neg_ln_h.exp());
    base + tail.ln_1p()
}

/// Smallest `ln(-ln h_j)` allowed by `h_j <= exp(-prod_{i<j} h_i^-(dn+1))`.
fn product_decay_requirement(prev: &[Level], n: usize, d: u32) -> f64 {
    let sum: f64 = prev.iter().map(|l| l.ln_neg_ln_h.exp()).sum();
    (d as f64 * n as f64 + 1.0) * sum
}

pub fn make_schedule(
    n: usize,
    d: u32,
    k: usize,
    mode: ScheduleMode,
    relaxed_ratio: &Rational,
) -> Result<Schedule, ScheduleError> {
    if k == 0 {
        return Err(ScheduleError::Empty);
    }
    if n == 0 || d == 0 {
        return Err(ScheduleError::BadDimension);
    }
    let mut levels = vec![Level::exact(first_scale())];
    match mode {
        ScheduleMode::Relaxed => {
            if !relaxed_ratio.is_positive() || relaxed_ratio >= &Rational::one() {
                return Err(ScheduleError::BadRatio);
            }
            let mut h = first_scale();
            for _ in 1..k {
                h = &h * relaxed_ratio;
                levels.push(Level::exact(h.clone()));
            }
        }
        ScheduleMode::Strict => {
            for j in 1..k {
                let need = power_decay_requirement(&levels[j - 1], d).max(product_decay_requirement(&levels, n, d));
                levels.push(Level::from_log(need));
            }
        }
    }
    Ok(Schedule { n, d, mode, levels })
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Exact scale of level `j` (1-based), if representable.
    pub fn h(&self, j: usize) -> Option<&Rational> {
        self.levels.get(j - 1).and_then(|l| l.h.as_ref())
    }

    /// Copy with level `j` (1-based) multiplied by `factor`.
    pub fn with_scaled_level(&self, j: usize, factor: &Rational) -> Schedule {
        let mut out = self.clone();
        let level = &mut out.levels[j - 1];
        *level = match &level.h {
            Some(h) => Level::exact(h * factor),
            None => {
                let neg_ln = level.ln_neg_ln_h.exp() - ln_abs(factor);
                Level::from_log(neg_ln.ln())
            }
        };
        out
    }

    /// Copy with level `j` (1-based) replaced.
    pub fn with_level(&self, j: usize, h: Rational) -> Schedule {
        let mut out = self.clone();
        out.levels[j - 1] = Level::exact(h);
        out
    }
}

/// Outcome of one inequality at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub pass: bool,
    /// Slack in `ln(-ln h)` units; exact checks report it too.
    pub margin: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub h: Option<String>,
    pub ln_h: f64,
    pub ln_neg_ln_h: f64,
    /// `h_j <= h_{j-1}^{d+1} / 6`; at the first level, `h_1 <= 1/10`.
    pub power_decay: Check,
    /// `h_j <= exp(-prod_{i<j} h_i^-(dn+1))`.
    pub product_decay: Check,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub n: usize,
    pub d: u32,
    pub mode: ScheduleMode,
    pub levels: Vec<LevelReport>,
    pub all_pass: bool,
}

impl ScheduleReport {
    /// 1-based levels where some inequality fails.
    pub fn failing_levels(&self) -> Vec<usize> {
        self.levels
            .iter()
            .filter(|l| !(l.power_decay.pass && l.product_decay.pass))
            .map(|l| l.level)
            .collect()
    }
}

fn pow(x: &Rational, e: u32) -> Rational {
    (0..e).fold(Rational::one(), |acc, _| acc * x)
}

pub fn validate_schedule(s: &Schedule) -> ScheduleReport {
    let mut levels = Vec::with_capacity(s.len());
    for (idx, level) in s.levels.iter().enumerate() {
        let power_decay = if idx == 0 {
            let bound = first_scale();
            match &level.h {
                Some(h) => Check {
                    pass: h <= &bound,
                    margin: level.ln_neg_ln_h - Level::exact(bound).ln_neg_ln_h,
                    exact: true,
                },
                None => {
                    let margin = level.ln_neg_ln_h - Level::exact(bound).ln_neg_ln_h;
                    Check {
                        pass: margin >= 0.0,
                        margin,
                        exact: false,
                    }
                }
            }
        } else {
            let prev = &s.levels[idx - 1];
            let margin = level.ln_neg_ln_h - power_decay_requirement(prev, s.d);
            match (&level.h, &prev.h) {
                (Some(h), Some(p)) => Check {
                    pass: h * int(6) <= pow(p, s.d + 1),
                    margin,
                    exact: true,
                },
                _ => Check {
                    pass: margin >= 0.0,
                    margin,
                    exact: false,
                },
            }
        };
        let product_decay = if idx == 0 {
            Check {
                pass: true,
                margin: 0.0,
                exact: true,
            }
        } else {
            let margin = level.ln_neg_ln_h - product_decay_requirement(&s.levels[..idx], s.n, s.d);
            Check {
                pass: margin >= 0.0,
                margin,
                exact: false,
            }
        };
        levels.push(LevelReport {
            level: idx + 1,
            h: level.h.as_ref().map(fmt_rational),
            ln_h: level.ln_h(),
            ln_neg_ln_h: level.ln_neg_ln_h,
            power_decay,
            product_decay,
        });
    }
    let all_pass = levels.iter().all(|l| l.power_decay.pass && l.product_decay.pass);
    ScheduleReport {
        n: s.n,
        d: s.d,
        mode: s.mode,
        levels,
        all_pass,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("radius needs 0 < h < 1")]
pub struct RadiusError;

/// `b = h^d / (2 ln(1/h))` as a rational lower approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusB {
    pub value: Rational,
    /// Upper bound on `(b_true - value) / b_true`.
    pub rel_error: f64,
    /// `h^{d+1}/2 <= b`.
    pub sandwich_lower: bool,
    /// `b <= h^d/4`; `None` when `ln(1/h) < 2`, where it is not claimed.
    pub sandwich_upper: Option<bool>,
}

const LN_SLACK: f64 = 1e-12;

pub fn radius_b(h: &Rational, d: u32) -> Result<RadiusB, RadiusError> {
    if !h.is_positive() || h >= &Rational::one() {
        return Err(RadiusError);
    }
    let ln_inv = -ln_abs(h);
    let ln_up = Rational::from_float(ln_inv * (1.0 + LN_SLACK)).ok_or(RadiusError)?;
    let ln_down = Rational::from_float(ln_inv * (1.0 - LN_SLACK)).ok_or(RadiusError)?;
    let hd = pow(h, d);
    let value = &hd / (&ln_up * int(2));
    let sandwich_lower = &hd * h / int(2) <= value;
    let sandwich_upper = if ln_down >= int(2) {
        Some(value <= &hd / int(4))
    } else {
        None
    };
    Ok(RadiusB {
        value,
        rel_error: 3.0 * LN_SLACK,
        sandwich_lower,
        sandwich_upper,
    })
}

/// `radius_b` as f64, for levels that exist only in log space.
pub fn radius_b_ln(level: &Level, d: u32) -> f64 {
    d as f64 * level.ln_h() - (2.0 * level.ln_neg_ln_h.exp()).ln()
}
