use thiserror::Error;

use crate::rotation::Angle;

/// Errors raised by the library. CLI exit codes are derived from
/// [`KmError::is_domain`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KmError {
    #[error(
        "invalid angle {p}/{q}: expected positive integers with 0 < p/q < 2 (angle in units of pi)"
    )]
    InvalidAngle { p: u64, q: u64 },

    #[error("cannot parse angle {0:?}: expected \"p/q\" (units of pi), e.g. \"1/4\"")]
    AngleSyntax(String),

    #[error("gamma is undefined at the zero vector")]
    ZeroVector,

    #[error("step size {0} is outside (0, 1)")]
    InvalidAlpha(f64),

    #[error("clip bound {0} is outside (0, 1)")]
    InvalidClip(f64),

    #[error("step count must be at least 1")]
    InvalidSteps,

    #[error("replica count must be at least 1")]
    InvalidReplicas,

    #[error("grid step {0} must lie in (0, 1e-3]")]
    InvalidGridStep(f64),

    #[error("beta_u = {0} must lie in (0, 1]")]
    InvalidBetaU(f64),

    #[error("noise parameters must satisfy A >= 0 and B >= 0 (got A = {a}, B = {b})")]
    InvalidNoise { a: f64, b: f64 },

    #[error("input is not finite: {0}")]
    NonFinite(&'static str),

    #[error("{what} is only defined for angles in (0, pi/2], got {angle}")]
    OutOfRange { what: &'static str, angle: Angle },

    #[error(
        "the pseudo-period bound for angle {0} needs an upper contraction factor beta_u; \
         supply one from the built-in table or a fresh search"
    )]
    MissingBetaU(Angle),

    #[error(
        "the l-infinity finite-sample bound for angle {angle} holds only for the fixed step size \
         alpha = 0.5 (got alpha = {alpha})"
    )]
    UnsupportedAlpha { alpha: f64, angle: Angle },

    #[error(
        "noise bound is unstable: mu + alpha^2 B = {rho} >= 1; B must stay below (1 - mu) / alpha^2 = {b_max}"
    )]
    Unstable { rho: f64, b_max: f64 },
}

impl KmError {
    /// True for violations of a mathematical precondition (as opposed to a
    /// malformed input value).
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            KmError::OutOfRange { .. }
                | KmError::MissingBetaU(_)
                | KmError::UnsupportedAlpha { .. }
                | KmError::Unstable { .. }
                | KmError::ZeroVector
        )
    }
}

pub type Result<T> = std::result::Result<T, KmError>;
