//! Step-size schedules and the KM iteration driver.

use std::fmt;

use crate::error::{KmError, Result};
use crate::rotation::{Angle, NormKind, RotationOp, Vec2};

pub const DEFAULT_CLIP: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    Constant(f64),
    /// `1 / ln(k + 1)`
    InvLog,
    /// `1 / sqrt(k)`
    InvSqrt,
    /// `1 / k`
    InvK,
}

/// Step-size rule `α_k`. Diminishing rules are capped at `clip_max`, since
/// `α = 1` is a pure rotation and makes no progress.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    kind: ScheduleKind,
    clip_max: f64,
}

impl Schedule {
    pub fn constant(alpha: f64) -> Result<Self> {
        Self::new(ScheduleKind::Constant(alpha), DEFAULT_CLIP)
    }

    pub fn new(kind: ScheduleKind, clip_max: f64) -> Result<Self> {
        if !(clip_max > 0.0 && clip_max < 1.0) {
            return Err(KmError::InvalidClip(clip_max));
        }
        if let ScheduleKind::Constant(a) = kind {
            if !(a > 0.0 && a < 1.0) {
                return Err(KmError::InvalidAlpha(a));
            }
        }
        Ok(Schedule { kind, clip_max })
    }

    pub fn inv_log() -> Self {
        Schedule {
            kind: ScheduleKind::InvLog,
            clip_max: DEFAULT_CLIP,
        }
    }

    pub fn inv_sqrt() -> Self {
        Schedule {
            kind: ScheduleKind::InvSqrt,
            clip_max: DEFAULT_CLIP,
        }
    }

    pub fn inv_k() -> Self {
        Schedule {
            kind: ScheduleKind::InvK,
            clip_max: DEFAULT_CLIP,
        }
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn clip_max(&self) -> f64 {
        self.clip_max
    }

    /// The constant step size, if this is a constant schedule.
    pub fn constant_alpha(&self) -> Option<f64> {
        match self.kind {
            ScheduleKind::Constant(a) => Some(a),
            _ => None,
        }
    }

    /// `α_k` for the 1-based iteration index `k`.
    pub fn step_size(&self, k: usize) -> f64 {
        let k = k.max(1) as f64;
        let raw = match self.kind {
            ScheduleKind::Constant(a) => return a,
            ScheduleKind::InvLog => 1.0 / (k + 1.0).ln(),
            ScheduleKind::InvSqrt => 1.0 / k.sqrt(),
            ScheduleKind::InvK => 1.0 / k,
        };
        raw.min(self.clip_max)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ScheduleKind::Constant(a) => write!(f, "const({a})"),
            ScheduleKind::InvLog => f.write_str("invlog"),
            ScheduleKind::InvSqrt => f.write_str("invsqrt"),
            ScheduleKind::InvK => f.write_str("invk"),
        }
    }
}

/// Every iterate of a run, 1-indexed through [`Trajectory::point`] and
/// [`Trajectory::norm_at`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub norm: NormKind,
    pub theta: Angle,
    pub schedule: Schedule,
    pub points: Vec<Vec2>,
    pub norms: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> Vec2 {
        self.points[k - 1]
    }

    pub fn norm_at(&self, k: usize) -> f64 {
        self.norms[k - 1]
    }

    /// Distance of the first iterate from the fixed point at the origin.
    pub fn initial_distance(&self) -> f64 {
        self.norms[0]
    }

    pub fn last_norm(&self) -> f64 {
        *self.norms.last().expect("trajectory is never empty")
    }
}

/// Runs `steps - 1` averaged updates from `x1`, recording `steps` iterates.
pub fn run_km(
    theta: Angle,
    norm: NormKind,
    schedule: Schedule,
    x1: Vec2,
    steps: usize,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(KmError::InvalidSteps);
    }
    if !x1.is_finite() {
        return Err(KmError::NonFinite("initial point"));
    }
    let op = RotationOp::new(theta);
    let mut points = Vec::with_capacity(steps);
    let mut x = x1;
    points.push(x);
    for k in 1..steps {
        x = op.apply_averaged(norm, schedule.step_size(k), x)?;
        points.push(x);
    }
    let norms = points.iter().map(|p| p.norm(norm)).collect();
    Ok(Trajectory {
        norm,
        theta,
        schedule,
        points,
        norms,
    })
}
