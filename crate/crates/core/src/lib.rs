//! Krasnosel'skii-Mann iteration for planar rotation operators.
//!
//! The crate covers the l2 iteration and the normalized l-infinity
//! iteration, closed-form finite-sample bounds for both, a brute-force
//! search for the l-infinity per-period contraction factor, and a Monte
//! Carlo harness for the l2 iteration under affine-variance noise.
//!
//! ```
//! use km_rotation::{bounds, km, Angle, NormKind, Vec2};
//!
//! let theta: Angle = "1/4".parse().unwrap();
//! let schedule = km::Schedule::constant(0.5).unwrap();
//! let traj = km::run_km(theta, NormKind::L2, schedule, Vec2::new(10.0, 30.0), 20).unwrap();
//! let bound = bounds::l2_bound(theta, 0.5, traj.initial_distance(), 20).unwrap();
//! assert!((traj.norm_at(20) - bound.at(20)).abs() < 1e-9);
//! ```

pub mod beta_search;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod km;
pub mod rotation;
pub mod stochastic;
pub mod table;

pub use error::{KmError, Result};
pub use rotation::{Angle, NormKind, RotationOp, Vec2};
