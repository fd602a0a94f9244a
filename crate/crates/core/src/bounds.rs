//! Closed-form finite-sample bounds.
//!
//! Every curve is indexed from `k = 1` and starts at the initial distance
//! `D` (or `D²` for the mean-square noise bound).

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;

use crate::error::{KmError, Result};
use crate::rotation::{Angle, RotationOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `g(α)^((k-1)/2)·D`, exact for the l2 iteration.
    L2Constant,
    /// `|1-2α|^(k-1)·D` at theta = pi.
    LInfHalfTurn,
    /// `0.5^⌊(k-1)/2⌋·D` at theta = pi/2.
    LInfQuarterTurn,
    /// `β_u^⌊(k-1)/T⌋·D` for theta in (0, pi/2).
    LInfPseudoPeriod,
    /// `((1 + tan(3pi/4 - theta))/2)^(k-1)·D` for theta in (pi/2, pi).
    LInfObtuse,
    /// Mean-square bound under affine-variance noise.
    NoiseMeanSquare,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::L2Constant => "l2-constant",
            BoundKind::LInfHalfTurn => "linf-half-turn",
            BoundKind::LInfQuarterTurn => "linf-quarter-turn",
            BoundKind::LInfPseudoPeriod => "linf-pseudo-period",
            BoundKind::LInfObtuse => "linf-obtuse",
            BoundKind::NoiseMeanSquare => "noise-mean-square",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub theta: Angle,
    pub alpha: f64,
    /// `D`, or `D²` for [`BoundKind::NoiseMeanSquare`].
    pub initial: f64,
    pub beta_u: Option<f64>,
    pub noise_a: Option<f64>,
    pub noise_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub params: BoundParams,
    pub values: Vec<f64>,
}

impl BoundCurve {
    /// Bound at the 1-based iteration `k`.
    pub fn at(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(KmError::InvalidAlpha(alpha))
    }
}

fn check_common(initial: f64, k_max: usize) -> Result<()> {
    if k_max == 0 {
        return Err(KmError::InvalidSteps);
    }
    if !(initial.is_finite() && initial >= 0.0) {
        return Err(KmError::NonFinite("initial distance"));
    }
    Ok(())
}

/// Per-step squared-norm factor of the l2 iteration,
/// `1 - 2α + 2α² + 2α(1-α)cosθ`.
pub fn mu(alpha: f64, theta: Angle) -> f64 {
    let c = RotationOp::new(theta).cos();
    1.0 - 2.0 * alpha + 2.0 * alpha * alpha + 2.0 * alpha * (1.0 - alpha) * c
}

/// `g(α) = (α-1)² + 2α(1-α)cosθ + α²`; the same polynomial as [`mu`].
pub fn g(alpha: f64, theta: Angle) -> f64 {
    let c = RotationOp::new(theta).cos();
    (alpha - 1.0).powi(2) + 2.0 * alpha * (1.0 - alpha) * c + alpha * alpha
}

/// Step size minimizing `g`, and the minimum `(1 + cosθ)/2`.
pub fn optimal_alpha_l2(theta: Angle) -> (f64, f64) {
    (0.5, (1.0 + RotationOp::new(theta).cos()) / 2.0)
}

/// `T = ⌈q/p⌉` for theta = (p/q)·pi in (0, pi/2].
pub fn pseudo_period(theta: Angle) -> Result<usize> {
    if !(theta.is_acute() || theta == Angle::HALF_PI) {
        return Err(KmError::OutOfRange {
            what: "pseudo-period",
            angle: theta,
        });
    }
    Ok(theta.denom().div_ceil(theta.numer()) as usize)
}

/// Lower per-period contraction factor `(1 + tan(pi/4 - theta/2))/2`.
///
/// Tight for angles `pi/q`. For other rational angles (e.g. 2pi/5, where
/// the observed per-period ratio drops to about 0.43) it is not a bound.
pub fn beta_l(theta: Angle) -> Result<f64> {
    if !(theta.is_acute() || theta == Angle::HALF_PI) {
        return Err(KmError::OutOfRange {
            what: "beta_l",
            angle: theta,
        });
    }
    Ok((1.0 + (FRAC_PI_4 - theta.radians() / 2.0).tan()) / 2.0)
}

/// Per-step contraction factor `(1 + tan(3pi/4 - theta))/2` for theta in
/// (pi/2, pi) at α = 0.5.
pub fn obtuse_step_factor(theta: Angle) -> f64 {
    (1.0 + (3.0 * PI / 4.0 - theta.radians()).tan()) / 2.0
}

fn curve(
    kind: BoundKind,
    params: BoundParams,
    k_max: usize,
    f: impl Fn(usize) -> f64,
) -> BoundCurve {
    BoundCurve {
        kind,
        params,
        values: (1..=k_max).map(f).collect(),
    }
}

/// `g(α)^((k-1)/2)·D` for k = 1..=k_max.
pub fn l2_bound(theta: Angle, alpha: f64, d: f64, k_max: usize) -> Result<BoundCurve> {
    check_alpha(alpha)?;
    check_common(d, k_max)?;
    let base = g(alpha, theta);
    let params = BoundParams {
        theta,
        alpha,
        initial: d,
        beta_u: None,
        noise_a: None,
        noise_b: None,
    };
    Ok(curve(BoundKind::L2Constant, params, k_max, |k| {
        base.powf((k - 1) as f64 / 2.0) * d
    }))
}

/// Finite-sample bound for the normalized l-infinity iteration.
///
/// Dispatches on the angle folded into (0, pi]:
/// pi accepts any α; every other angle requires α = 0.5, and angles in
/// (0, pi/2) additionally need `beta_u`.
pub fn linf_bound(
    theta: Angle,
    alpha: f64,
    d: f64,
    k_max: usize,
    beta_u: Option<f64>,
) -> Result<BoundCurve> {
    check_alpha(alpha)?;
    check_common(d, k_max)?;
    let folded = theta.folded();
    let mut params = BoundParams {
        theta,
        alpha,
        initial: d,
        beta_u: None,
        noise_a: None,
        noise_b: None,
    };

    if folded.is_pi() {
        let base = (1.0 - 2.0 * alpha).abs();
        return Ok(curve(BoundKind::LInfHalfTurn, params, k_max, |k| {
            base.powi((k - 1) as i32) * d
        }));
    }
    if alpha != 0.5 {
        return Err(KmError::UnsupportedAlpha {
            alpha,
            angle: theta,
        });
    }
    if folded.is_right() {
        return Ok(curve(BoundKind::LInfQuarterTurn, params, k_max, |k| {
            0.5f64.powi(((k - 1) / 2) as i32) * d
        }));
    }
    if folded.is_acute() {
        let beta = beta_u.ok_or(KmError::MissingBetaU(theta))?;
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(KmError::InvalidBetaU(beta));
        }
        let period = pseudo_period(folded)?;
        params.beta_u = Some(beta);
        return Ok(curve(BoundKind::LInfPseudoPeriod, params, k_max, |k| {
            beta.powi(((k - 1) / period) as i32) * d
        }));
    }
    let base = obtuse_step_factor(folded);
    Ok(curve(BoundKind::LInfObtuse, params, k_max, |k| {
        base.powi((k - 1) as i32) * d
    }))
}

/// Largest `B` keeping `mu + α²B < 1`.
pub fn noise_stability_threshold(theta: Angle, alpha: f64) -> f64 {
    (1.0 - mu(alpha, theta)) / (alpha * alpha)
}

/// Mean-square bound `ρ^(k-1)·D² + Aα²(1 - ρ^(k-1))/(1 - ρ)` with
/// `ρ = mu + α²B`. Values are squared norms.
pub fn noise_bound(
    theta: Angle,
    alpha: f64,
    d2: f64,
    a: f64,
    b: f64,
    k_max: usize,
) -> Result<BoundCurve> {
    check_alpha(alpha)?;
    check_common(d2, k_max)?;
    if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(KmError::InvalidNoise { a, b });
    }
    let rho = mu(alpha, theta) + alpha * alpha * b;
    if rho >= 1.0 {
        return Err(KmError::Unstable {
            rho,
            b_max: noise_stability_threshold(theta, alpha),
        });
    }
    let params = BoundParams {
        theta,
        alpha,
        initial: d2,
        beta_u: None,
        noise_a: Some(a),
        noise_b: Some(b),
    };
    let drift = a * alpha * alpha / (1.0 - rho);
    Ok(curve(BoundKind::NoiseMeanSquare, params, k_max, |k| {
        let decay = rho.powi((k - 1) as i32);
        decay * d2 + drift * (1.0 - decay)
    }))
}
