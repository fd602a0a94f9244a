//! Exact angles, planar vectors, norms and the rotation operators.
//!
//! Angles are rational multiples of pi so that the special angles
//! (pi/2, pi, their mirrors) and the pseudo-period are decided exactly.
//! Everything else is plain `f64`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use crate::error::{KmError, Result};

const HALF_SQRT_3: f64 = 0.866_025_403_784_438_6;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Rotation angle `(p/q)·pi`, kept in lowest terms with `0 < p/q < 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Angle {
    p: u64,
    q: u64,
}

impl Angle {
    pub const HALF_PI: Angle = Angle { p: 1, q: 2 };
    pub const PI: Angle = Angle { p: 1, q: 1 };

    /// Builds `(p/q)·pi`, reducing the fraction.
    pub fn new(p: u64, q: u64) -> Result<Self> {
        if p == 0 || q == 0 || p >= 2 * q {
            return Err(KmError::InvalidAngle { p, q });
        }
        let g = gcd(p, q);
        Ok(Angle { p: p / g, q: q / g })
    }

    pub fn numer(&self) -> u64 {
        self.p
    }

    pub fn denom(&self) -> u64 {
        self.q
    }

    pub fn radians(&self) -> f64 {
        self.p as f64 / self.q as f64 * PI
    }

    /// `2·pi - theta`, which maps (pi, 2pi) onto (0, pi).
    pub fn mirror(&self) -> Angle {
        Angle {
            p: 2 * self.q - self.p,
            q: self.q,
        }
    }

    /// The representative in (0, pi]: the angle itself, or its mirror.
    pub fn folded(&self) -> Angle {
        if self.p > self.q {
            self.mirror()
        } else {
            *self
        }
    }

    pub fn is_pi(&self) -> bool {
        *self == Angle::PI
    }

    /// pi/2 or 3pi/2.
    pub fn is_right(&self) -> bool {
        self.q == 2
    }

    /// Membership in {pi/2, pi, 3pi/2}: the angles where the normalized
    /// l-infinity rotation coincides with the plain rotation.
    pub fn is_l_inf_exact(&self) -> bool {
        self.is_pi() || self.is_right()
    }

    /// `0 < theta < pi/2` (strict).
    pub fn is_acute(&self) -> bool {
        2 * self.p < self.q
    }

    /// `pi/2 < theta < pi` (strict).
    pub fn is_obtuse(&self) -> bool {
        2 * self.p > self.q && self.p < self.q
    }

    /// Exact cosine and sine for multiples of pi/4 and pi/6.
    fn special_cos_sin(&self) -> Option<(f64, f64)> {
        if 12 % self.q != 0 {
            return None;
        }
        let n = self.p * (12 / self.q);
        let cos = |n: u64| -> Option<f64> {
            Some(match n % 24 {
                0 => 1.0,
                2 | 22 => HALF_SQRT_3,
                3 | 21 => FRAC_1_SQRT_2,
                4 | 20 => 0.5,
                6 | 18 => 0.0,
                8 | 16 => -0.5,
                9 | 15 => -FRAC_1_SQRT_2,
                10 | 14 => -HALF_SQRT_3,
                12 => -1.0,
                _ => return None,
            })
        };
        Some((cos(n)?, cos(n + 18)?))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Angle {
    type Err = KmError;

    /// Accepts `"p/q"` or a bare integer `"p"` (meaning `p/1`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || KmError::AngleSyntax(s.to_string());
        let (p, q) = match s.trim().split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s.trim(), "1"),
        };
        let p: u64 = p.parse().map_err(|_| bad())?;
        let q: u64 = q.parse().map_err(|_| bad())?;
        Angle::new(p, q)
    }
}

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x1: f64,
    pub x2: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Vec2 { x1, x2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.x1 == 0.0 && self.x2 == 0.0
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L2 => self.x1.hypot(self.x2),
            NormKind::LInf => self.x1.abs().max(self.x2.abs()),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x1 * s, self.x2 * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x1, -self.x2)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from([x1, x2]: [f64; 2]) -> Self {
        Vec2::new(x1, x2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    L2,
    LInf,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::L2 => "l2",
            NormKind::LInf => "linf",
        })
    }
}

/// Counter-clockwise rotation by an exact angle, with cached trig values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationOp {
    angle: Angle,
    cos: f64,
    sin: f64,
}

impl RotationOp {
    pub fn new(angle: Angle) -> Self {
        let (cos, sin) = angle.special_cos_sin().unwrap_or_else(|| {
            let (s, c) = angle.radians().sin_cos();
            (c, s)
        });
        RotationOp { angle, cos, sin }
    }

    pub fn angle(&self) -> Angle {
        self.angle
    }

    pub fn cos(&self) -> f64 {
        self.cos
    }

    pub fn sin(&self) -> f64 {
        self.sin
    }

    /// Row-major `[[cos, -sin], [sin, cos]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.cos, -self.sin], [self.sin, self.cos]]
    }

    pub fn rotate(&self, x: Vec2) -> Vec2 {
        Vec2::new(
            self.cos * x.x1 - self.sin * x.x2,
            self.sin * x.x1 + self.cos * x.x2,
        )
    }

    /// `‖x‖∞ / ‖Rx‖∞`, always in [√2/2, √2].
    pub fn gamma(&self, x: Vec2) -> Result<f64> {
        if x.is_zero() {
            return Err(KmError::ZeroVector);
        }
        Ok(x.norm(NormKind::LInf) / self.rotate(x).norm(NormKind::LInf))
    }

    /// The normalized rotation `γ(x)·Rx`, which keeps the l-infinity norm of
    /// `x`. The zero vector maps to itself.
    pub fn rotate_linf(&self, x: Vec2) -> Vec2 {
        if x.is_zero() {
            return Vec2::ZERO;
        }
        let rx = self.rotate(x);
        // Dividing first makes the dominant coordinate exactly ±‖x‖∞.
        let m = rx.norm(NormKind::LInf);
        let n = x.norm(NormKind::LInf);
        Vec2::new(rx.x1 / m * n, rx.x2 / m * n)
    }

    /// One averaged (Krasnosel'skii-Mann) step `(1-α)x + α·T(x)`, where `T`
    /// is the rotation for `L2` and the normalized rotation for `LInf`.
    pub fn apply_averaged(&self, norm: NormKind, alpha: f64, x: Vec2) -> Result<Vec2> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(KmError::InvalidAlpha(alpha));
        }
        let tx = match norm {
            NormKind::L2 => self.rotate(x),
            NormKind::LInf => self.rotate_linf(x),
        };
        Ok(x * (1.0 - alpha) + tx * alpha)
    }
}
