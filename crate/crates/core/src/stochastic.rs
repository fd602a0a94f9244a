//! KM iteration under martingale-difference noise with affine variance,
//! and a Monte Carlo estimator of `E‖x_k‖²`.
//!
//! Each replica `r` draws from its own ChaCha stream `(seed, r)`. Replicas
//! are grouped into fixed blocks whose compensated partial sums are merged
//! in block order, so results do not depend on the number of workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bounds::{noise_bound, BoundCurve};
use crate::error::{KmError, Result};
use crate::rotation::{Angle, NormKind, RotationOp, Vec2};

const BLOCK: usize = 64;

/// Noise with `E[ω | x] = 0` and `E‖ω‖² = A + B‖x‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    a: f64,
    b: f64,
}

impl NoiseParams {
    /// `A = 0` is accepted as the noiseless limit.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(KmError::InvalidNoise { a, b });
        }
        Ok(NoiseParams { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Total second moment `A + B‖x‖₂²`.
    pub fn variance_at(&self, x: Vec2) -> f64 {
        self.a + self.b * x.norm_sq()
    }
}

/// Isotropic Gaussian draw, variance `(A + B‖x‖₂²)/2` per component.
pub fn draw_noise<R: Rng + ?Sized>(noise: &NoiseParams, x: Vec2, rng: &mut R) -> Vec2 {
    let sd = (noise.variance_at(x) / 2.0).sqrt();
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    Vec2::new(sd * z1, sd * z2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub theta: Angle,
    pub alpha: f64,
    pub x1: Vec2,
    pub noise: NoiseParams,
    pub replicas: usize,
    pub steps: usize,
    pub seed: u64,
    /// `LInf` runs the normalized iteration with the same noise; no bound
    /// is attached in that mode.
    pub norm: NormKind,
}

impl McConfig {
    pub fn l2(
        theta: Angle,
        alpha: f64,
        x1: Vec2,
        noise: NoiseParams,
        replicas: usize,
        steps: usize,
        seed: u64,
    ) -> Self {
        McConfig {
            theta,
            alpha,
            x1,
            noise,
            replicas,
            steps,
            seed,
            norm: NormKind::L2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    /// Mean of `‖x_k‖²` over replicas, k = 1..=steps.
    pub mean_sq_norm: Vec<f64>,
    /// Sample standard deviation of `‖x_k‖²` divided by `sqrt(replicas)`.
    pub std_err: Vec<f64>,
    /// Mean-square bound; `None` when unstable or in `LInf` mode.
    pub bound: Option<BoundCurve>,
    /// Set when `mu + α²B >= 1`.
    pub unstable: bool,
}

/// Neumaier summation.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Welford accumulator, merged across blocks with Chan's update.
#[derive(Debug, Clone, Copy, Default)]
struct Spread {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Spread {
    fn push(&mut self, v: f64) {
        self.count += 1.0;
        let delta = v - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(&mut self, other: &Spread) {
        if other.count == 0.0 {
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        self.m2 += other.m2 + delta * delta * self.count * other.count / n;
        self.mean += delta * other.count / n;
        self.count = n;
    }
}

#[derive(Clone)]
struct BlockMoments {
    sum: Vec<CompensatedSum>,
    spread: Vec<Spread>,
}

fn squared_norm(x: Vec2, norm: NormKind) -> f64 {
    match norm {
        NormKind::L2 => x.norm_sq(),
        NormKind::LInf => x.norm(NormKind::LInf).powi(2),
    }
}

fn replica_rng(seed: u64, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

fn run_block(cfg: &McConfig, op: &RotationOp, replicas: std::ops::Range<usize>) -> BlockMoments {
    let mut m = BlockMoments {
        sum: vec![CompensatedSum::default(); cfg.steps],
        spread: vec![Spread::default(); cfg.steps],
    };
    let alpha = cfg.alpha;
    for r in replicas {
        let mut rng = replica_rng(cfg.seed, r);
        let mut x = cfg.x1;
        for k in 0..cfg.steps {
            let q = squared_norm(x, cfg.norm);
            m.sum[k].add(q);
            m.spread[k].push(q);
            if k + 1 == cfg.steps {
                break;
            }
            let tx = match cfg.norm {
                NormKind::L2 => op.rotate(x),
                NormKind::LInf => op.rotate_linf(x),
            };
            let w = draw_noise(&cfg.noise, x, &mut rng);
            x = x * (1.0 - alpha) + (tx + w) * alpha;
        }
    }
    m
}

/// Runs `replicas` independent noisy chains and aggregates `‖x_k‖²`.
pub fn run_stochastic_km(cfg: &McConfig) -> Result<McResult> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(KmError::InvalidAlpha(cfg.alpha));
    }
    if cfg.steps == 0 {
        return Err(KmError::InvalidSteps);
    }
    if cfg.replicas == 0 {
        return Err(KmError::InvalidReplicas);
    }
    if !cfg.x1.is_finite() {
        return Err(KmError::NonFinite("initial point"));
    }
    let op = RotationOp::new(cfg.theta);
    let blocks: Vec<BlockMoments> = (0..cfg.replicas.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| run_block(cfg, &op, b * BLOCK..((b + 1) * BLOCK).min(cfg.replicas)))
        .collect();

    let mut sum = vec![CompensatedSum::default(); cfg.steps];
    let mut spread = vec![Spread::default(); cfg.steps];
    for block in &blocks {
        for k in 0..cfg.steps {
            sum[k].merge(&block.sum[k]);
            spread[k].merge(&block.spread[k]);
        }
    }

    let n = cfg.replicas as f64;
    let mean_sq_norm: Vec<f64> = sum.iter().map(|s| s.value() / n).collect();
    let std_err = if cfg.replicas < 2 {
        vec![0.0; cfg.steps]
    } else {
        spread
            .iter()
            .map(|s| (s.m2.max(0.0) / (n - 1.0) / n).sqrt())
            .collect()
    };

    let (bound, unstable) = match cfg.norm {
        NormKind::LInf => (None, false),
        NormKind::L2 => match noise_bound(
            cfg.theta,
            cfg.alpha,
            cfg.x1.norm_sq(),
            cfg.noise.a(),
            cfg.noise.b(),
            cfg.steps,
        ) {
            Ok(c) => (Some(c), false),
            Err(KmError::Unstable { .. }) => (None, true),
            Err(e) => return Err(e),
        },
    };

    Ok(McResult {
        mean_sq_norm,
        std_err,
        bound,
        unstable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::mu;

    fn ang(p: u64, q: u64) -> Angle {
        Angle::new(p, q).unwrap()
    }

    #[test]
    fn spread_merge_matches_direct() {
        let data: Vec<f64> = (0..1000)
            .map(|i| ((i * 37) % 101) as f64 * 0.13 + 5.0)
            .collect();
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let m2: f64 = data.iter().map(|v| (v - mean).powi(2)).sum();
        let mut total = Spread::default();
        for chunk in data.chunks(64) {
            let mut s = Spread::default();
            chunk.iter().for_each(|&v| s.push(v));
            total.merge(&s);
        }
        assert!((total.mean - mean).abs() < 1e-12);
        assert!((total.m2 - m2).abs() < 1e-9 * m2);

        let mut same = Spread::default();
        (0..500).for_each(|_| same.push(10.000000000000002));
        assert_eq!(same.m2, 0.0);
    }

    #[test]
    fn noise_params_validation() {
        assert!(NoiseParams::new(2.0, 0.0).is_ok());
        assert!(NoiseParams::new(0.0, 0.0).is_ok());
        assert!(NoiseParams::new(-1.0, 0.0).is_err());
        assert!(NoiseParams::new(1.0, f64::NAN).is_err());
    }

    fn noise_moments(noise: NoiseParams, x: Vec2, draws: usize, seed: u64) -> (Vec2, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s1 = CompensatedSum::default();
        let mut s2 = CompensatedSum::default();
        let mut sq = CompensatedSum::default();
        for _ in 0..draws {
            let w = draw_noise(&noise, x, &mut rng);
            s1.add(w.x1);
            s2.add(w.x2);
            sq.add(w.norm_sq());
        }
        let n = draws as f64;
        (Vec2::new(s1.value() / n, s2.value() / n), sq.value() / n)
    }

    #[test]
    fn additive_noise_second_moment() {
        let noise = NoiseParams::new(2.0, 0.0).unwrap();
        let (_, m2) = noise_moments(noise, Vec2::new(5.0, -1.0), 1_000_000, 11);
        assert!((m2 - 2.0).abs() < 0.01 * 2.0, "{m2}");
    }

    #[test]
    fn affine_noise_moments() {
        let noise = NoiseParams::new(0.1, 0.5).unwrap();
        let x = Vec2::new(1.0, 3.0);
        assert!((noise.variance_at(x) - 5.1).abs() < 1e-12);
        let draws = 1_000_000;
        let (mean, m2) = noise_moments(noise, x, draws, 5);
        assert!((m2 - 5.1).abs() < 0.01 * 5.1, "{m2}");
        // per-component variance 5.1/2
        let se = (5.1 / 2.0 / draws as f64).sqrt();
        assert!(
            mean.x1.abs() < 4.0 * se && mean.x2.abs() < 4.0 * se,
            "{mean:?}"
        );
    }

    #[test]
    fn noiseless_matches_recursion() {
        let theta = ang(1, 4);
        let noise = NoiseParams::new(0.0, 0.0).unwrap();
        let cfg = McConfig::l2(theta, 0.5, Vec2::new(1.0, 3.0), noise, 1, 60, 0);
        let res = run_stochastic_km(&cfg).unwrap();
        let m = mu(0.5, theta);
        for (k, v) in res.mean_sq_norm.iter().enumerate() {
            let expected = m.powi(k as i32) * 10.0;
            assert!(
                (v - expected).abs() <= 1e-12 * expected,
                "k={} {v} {expected}",
                k + 1
            );
        }
        assert!(res.std_err.iter().all(|&s| s == 0.0));
        assert!(!res.unstable);
        let bound = res.bound.unwrap();
        assert_eq!(bound.at(1), 10.0);
    }

    #[test]
    fn unstable_is_flagged() {
        let noise = NoiseParams::new(0.1, 0.6).unwrap();
        let cfg = McConfig::l2(ang(1, 4), 0.5, Vec2::new(1.0, 3.0), noise, 8, 20, 3);
        let res = run_stochastic_km(&cfg).unwrap();
        assert!(res.unstable);
        assert!(res.bound.is_none());
        assert!(res.mean_sq_norm.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn linf_mode_has_no_bound() {
        let noise = NoiseParams::new(0.5, 0.0).unwrap();
        let mut cfg = McConfig::l2(ang(1, 4), 0.5, Vec2::new(1.0, 3.0), noise, 100, 50, 3);
        cfg.norm = NormKind::LInf;
        let res = run_stochastic_km(&cfg).unwrap();
        assert!(res.bound.is_none() && !res.unstable);
        assert_eq!(res.mean_sq_norm[0], 9.0);
    }

    #[test]
    fn deterministic_across_workers() {
        let noise = NoiseParams::new(2.0, 0.2).unwrap();
        let cfg = McConfig::l2(ang(1, 4), 0.5, Vec2::new(1.0, 3.0), noise, 1000, 40, 99);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_stochastic_km(&cfg).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
        let mut other = cfg.clone();
        other.seed = 100;
        assert_ne!(
            one.mean_sq_norm,
            run_stochastic_km(&other).unwrap().mean_sq_norm
        );
    }

    #[test]
    fn rejects_bad_config() {
        let noise = NoiseParams::new(1.0, 0.0).unwrap();
        let base = McConfig::l2(ang(1, 4), 0.5, Vec2::new(1.0, 3.0), noise, 10, 10, 0);
        let mut c = base.clone();
        c.replicas = 0;
        assert_eq!(run_stochastic_km(&c), Err(KmError::InvalidReplicas));
        let mut c = base.clone();
        c.steps = 0;
        assert_eq!(run_stochastic_km(&c), Err(KmError::InvalidSteps));
        let mut c = base;
        c.alpha = 1.0;
        assert!(matches!(
            run_stochastic_km(&c),
            Err(KmError::InvalidAlpha(_))
        ));
    }
}
