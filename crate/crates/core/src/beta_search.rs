//! Numerical search for the per-period contraction factor `β_u` of the
//! normalized l-infinity iteration at α = 0.5.
//!
//! The iteration map is positively homogeneous and commutes with quarter
//! turns, so sweeping starts `[t, 1]` along the top edge of the unit
//! l-infinity sphere covers every direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{beta_l, pseudo_period};
use crate::error::{KmError, Result};
use crate::rotation::{Angle, NormKind, RotationOp, Vec2};

pub const DEFAULT_GRID_STEP: f64 = 1e-4;

/// Absolute slack used by [`verify_period_contraction`] on unit-norm starts.
pub const PERIOD_TOL: f64 = 1e-6;

const STEP: f64 = 0.5;

/// Reference values of `β_u` (angle as `(p, q)` in units of pi).
pub const TABLE_BETA_U: [((u64, u64), f64); 5] = [
    ((1, 12), 0.8974),
    ((1, 6), 0.8211),
    ((1, 4), 0.7504),
    ((1, 3), 0.6830),
    ((1, 2), 0.5),
];

/// Tabulated `β_u` for the angle (folded into (0, pi]), if listed.
pub fn table_beta_u(theta: Angle) -> Option<f64> {
    let f = theta.folded();
    TABLE_BETA_U
        .iter()
        .find(|((p, q), _)| f.numer() == *p && f.denom() == *q)
        .map(|(_, b)| *b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSearchResult {
    pub theta: Angle,
    pub period: usize,
    pub beta_u: f64,
    pub argmax_start: Vec2,
    pub grid_step: f64,
}

/// `‖x_{1+T}‖∞ / ‖x_1‖∞` after one pseudo-period from `x1`.
pub fn period_ratio(op: &RotationOp, period: usize, x1: Vec2) -> f64 {
    let n0 = x1.norm(NormKind::LInf);
    let mut x = x1;
    for _ in 0..period {
        x = op
            .apply_averaged(NormKind::LInf, STEP, x)
            .expect("fixed step size is valid");
    }
    x.norm(NormKind::LInf) / n0
}

fn check_acute_or_right(theta: Angle, what: &'static str) -> Result<()> {
    if theta.is_acute() || theta == Angle::HALF_PI {
        Ok(())
    } else {
        Err(KmError::OutOfRange { what, angle: theta })
    }
}

/// Larger ratio wins; ties go to the smaller `t`.
fn better(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Maximum ratio over `t = center + j·h` for `|j| <= half_width`, `t` in [-1, 1].
fn sweep(op: &RotationOp, period: usize, center: f64, h: f64, half_width: i64) -> (f64, f64) {
    (-half_width..=half_width)
        .into_par_iter()
        .filter_map(|j| {
            let t = center + j as f64 * h;
            (t.abs() <= 1.0 + 1e-12).then(|| {
                let t = t.clamp(-1.0, 1.0);
                (period_ratio(op, period, Vec2::new(t, 1.0)), t)
            })
        })
        .reduce(|| (f64::NEG_INFINITY, f64::INFINITY), better)
}

/// Brute-force `β_u` over starts `[t, 1]`, `t ∈ [-1, 1]`, at `grid_step`,
/// followed by two tenfold-finer passes around the coarse maximizer.
pub fn search_beta_u(theta: Angle, grid_step: f64) -> Result<BetaSearchResult> {
    check_acute_or_right(theta, "beta_u search")?;
    if !(grid_step > 0.0 && grid_step <= 1e-3) {
        return Err(KmError::InvalidGridStep(grid_step));
    }
    let period = pseudo_period(theta)?;
    let op = RotationOp::new(theta);

    let n = (2.0 / grid_step).ceil() as i64;
    let coarse_h = 2.0 / n as f64;
    let half = n / 2;
    let mut best = sweep(
        &op,
        period,
        -1.0 + half as f64 * coarse_h,
        coarse_h,
        n - half,
    );

    let mut h = coarse_h;
    for _ in 0..2 {
        let fine = h / 10.0;
        best = better(best, sweep(&op, period, best.1, fine, 10));
        h = fine;
    }

    Ok(BetaSearchResult {
        theta,
        period,
        beta_u: best.0,
        argmax_start: Vec2::new(best.1, 1.0),
        grid_step,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodReport {
    pub theta: Angle,
    pub period: usize,
    pub beta_l: f64,
    pub beta_u: f64,
    pub trials: usize,
    pub upper_violations: usize,
    pub lower_violations: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
}

impl PeriodReport {
    pub fn passed(&self) -> bool {
        self.upper_violations == 0 && self.lower_violations == 0
    }
}

/// Checks `β_l ≤ ‖x_{i+T}‖ / ‖x_i‖ ≤ β_u` (with [`PERIOD_TOL`] slack) from
/// random unit-circle starts at random offsets `i ∈ [0, 3T]`.
pub fn verify_period_contraction(
    theta: Angle,
    beta_u: f64,
    trials: usize,
    seed: u64,
) -> Result<PeriodReport> {
    check_acute_or_right(theta, "period contraction check")?;
    let period = pseudo_period(theta)?;
    let lower = beta_l(theta)?;
    let op = RotationOp::new(theta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut report = PeriodReport {
        theta,
        period,
        beta_l: lower,
        beta_u,
        trials,
        upper_violations: 0,
        lower_violations: 0,
        max_ratio: f64::NEG_INFINITY,
        min_ratio: f64::INFINITY,
    };
    for _ in 0..trials {
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        let offset = rng.random_range(0..=3 * period);
        let mut x = Vec2::new(phase.cos(), phase.sin());
        for _ in 0..offset {
            x = op.apply_averaged(NormKind::LInf, STEP, x)?;
        }
        // homogeneity lets every offset be checked on a unit-norm start
        x = x * (1.0 / x.norm(NormKind::LInf));
        let r = period_ratio(&op, period, x);
        report.max_ratio = report.max_ratio.max(r);
        report.min_ratio = report.min_ratio.min(r);
        if r > beta_u + PERIOD_TOL {
            report.upper_violations += 1;
        }
        if r < lower - PERIOD_TOL {
            report.lower_violations += 1;
        }
    }
    Ok(report)
}
