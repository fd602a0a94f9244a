//! Command-line front end. Each subcommand produces a [`CsvTable`].
//!
//! Exit codes: 0 success, 2 malformed input, 3 violated mathematical
//! precondition (see [`exit_code`]).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::beta_search::{search_beta_u, table_beta_u, DEFAULT_GRID_STEP};
use crate::bounds::{l2_bound, linf_bound, BoundCurve};
use crate::error::{KmError, Result};
use crate::km::{run_km, Schedule, ScheduleKind, DEFAULT_CLIP};
use crate::rotation::{Angle, NormKind, Vec2};
use crate::stochastic::{run_stochastic_km, McConfig, NoiseParams};
use crate::table::{fmt_real, CsvTable};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "km-rotation",
    version,
    about = "KM iteration for planar rotations: trajectories, bounds, beta_u search, Monte Carlo"
)]
pub struct Cli {
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the deterministic iteration and emit the trajectory with its bound.
    Simulate(SimulateArgs),
    /// Emit a finite-sample bound curve.
    Bound(BoundArgs),
    /// Search the per-period contraction factor beta_u.
    SearchBeta(SearchBetaArgs),
    /// Monte Carlo estimate of E||x_k||^2 under affine-variance noise.
    Mc(McArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    L2,
    Linf,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::L2 => NormKind::L2,
            NormArg::Linf => NormKind::LInf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Const,
    Invlog,
    Invsqrt,
    Invk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BetaSource {
    /// Built-in reference values (pi/12, pi/6, pi/4, pi/3, pi/2).
    Builtin,
    /// Fresh search at the default grid step.
    Search,
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("step size must lie in (0, 1), got {a}"))
    }
}

fn parse_point(s: &str) -> std::result::Result<Vec2, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated reals, got {s:?}"))?;
    let a: f64 = a
        .trim()
        .parse()
        .map_err(|e| format!("first coordinate: {e}"))?;
    let b: f64 = b
        .trim()
        .parse()
        .map_err(|e| format!("second coordinate: {e}"))?;
    let v = Vec2::new(a, b);
    if v.is_finite() {
        Ok(v)
    } else {
        Err("coordinates must be finite".into())
    }
}

fn parse_nonneg(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite value >= 0, got {v}"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Rotation angle as p/q in units of pi, e.g. 1/4.
    #[arg(long)]
    pub theta: Angle,
    /// Constant step size (used with --schedule const).
    #[arg(long, default_value = "0.5", value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = NormArg::L2)]
    pub norm: NormArg,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Const)]
    pub schedule: ScheduleArg,
    /// Initial point "a,b".
    #[arg(long, default_value = "10,30", value_parser = parse_point, allow_hyphen_values = true)]
    pub x1: Vec2,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    #[arg(long, value_enum, default_value_t = BetaSource::Builtin)]
    pub beta_table: BetaSource,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub theta: Angle,
    #[arg(long, default_value = "0.5", value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = NormArg::L2)]
    pub norm: NormArg,
    /// Initial point; D is its norm unless --d is given.
    #[arg(long, default_value = "10,30", value_parser = parse_point, allow_hyphen_values = true)]
    pub x1: Vec2,
    /// Initial distance D (overrides --x1).
    #[arg(long, value_parser = parse_nonneg)]
    pub d: Option<f64>,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    #[arg(long, value_enum, default_value_t = BetaSource::Builtin)]
    pub beta_table: BetaSource,
}

#[derive(Debug, Clone, Args)]
pub struct SearchBetaArgs {
    #[arg(long)]
    pub theta: Angle,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[arg(long)]
    pub theta: Angle,
    #[arg(long, default_value = "0.5", value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long, default_value = "1,3", value_parser = parse_point, allow_hyphen_values = true)]
    pub x1: Vec2,
    /// Additive noise variance A.
    #[arg(long = "a", default_value = "2", value_parser = parse_nonneg)]
    pub noise_a: f64,
    /// State-proportional noise coefficient B.
    #[arg(long = "b", default_value = "0", value_parser = parse_nonneg)]
    pub noise_b: f64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub replicas: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// linf runs the normalized iteration without a bound.
    #[arg(long, value_enum, default_value_t = NormArg::L2)]
    pub norm: NormArg,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
}

/// Exit code for a library error.
pub fn exit_code(e: &KmError) -> i32 {
    if e.is_domain() {
        EXIT_DOMAIN
    } else {
        EXIT_USAGE
    }
}

fn with_workers<T: Send>(workers: Option<u64>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

fn resolve_beta(theta: Angle, source: BetaSource) -> Result<Option<f64>> {
    if !theta.folded().is_acute() {
        return Ok(None);
    }
    Ok(match source {
        BetaSource::Builtin => table_beta_u(theta),
        BetaSource::Search => Some(search_beta_u(theta.folded(), DEFAULT_GRID_STEP)?.beta_u),
    })
}

fn bound_for(
    theta: Angle,
    alpha: f64,
    norm: NormKind,
    d: f64,
    steps: usize,
    source: BetaSource,
) -> Result<BoundCurve> {
    match norm {
        NormKind::L2 => l2_bound(theta, alpha, d, steps),
        NormKind::LInf => linf_bound(theta, alpha, d, steps, resolve_beta(theta, source)?),
    }
}

/// Columns `k, x1, x2, norm_value, bound_value`. The bound is left empty
/// for diminishing schedules, which have no closed-form bound.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<CsvTable> {
    let norm: NormKind = args.norm.into();
    let steps = args.steps as usize;
    let schedule = match args.schedule {
        ScheduleArg::Const => Schedule::constant(args.alpha)?,
        ScheduleArg::Invlog => Schedule::new(ScheduleKind::InvLog, DEFAULT_CLIP)?,
        ScheduleArg::Invsqrt => Schedule::new(ScheduleKind::InvSqrt, DEFAULT_CLIP)?,
        ScheduleArg::Invk => Schedule::new(ScheduleKind::InvK, DEFAULT_CLIP)?,
    };
    let bound = match schedule.constant_alpha() {
        Some(alpha) => Some(bound_for(
            args.theta,
            alpha,
            norm,
            args.x1.norm(norm),
            steps,
            args.beta_table,
        )?),
        None => None,
    };
    let traj = run_km(args.theta, norm, schedule, args.x1, steps)?;

    let mut table = CsvTable::new(["k", "x1", "x2", "norm_value", "bound_value"]);
    for k in 1..=traj.len() {
        let p = traj.point(k);
        table.push(vec![
            k.to_string(),
            fmt_real(p.x1),
            fmt_real(p.x2),
            fmt_real(traj.norm_at(k)),
            bound
                .as_ref()
                .map(|b| fmt_real(b.at(k)))
                .unwrap_or_default(),
        ]);
    }
    Ok(table)
}

/// Columns `k, bound_value`.
pub fn cmd_bound(args: &BoundArgs) -> Result<CsvTable> {
    let norm: NormKind = args.norm.into();
    let d = args.d.unwrap_or_else(|| args.x1.norm(norm));
    let curve = bound_for(
        args.theta,
        args.alpha,
        norm,
        d,
        args.steps as usize,
        args.beta_table,
    )?;
    let mut table = CsvTable::new(["k", "bound_value"]);
    for (i, v) in curve.values.iter().enumerate() {
        table.push(vec![(i + 1).to_string(), fmt_real(*v)]);
    }
    Ok(table)
}

/// Single row `theta, T, beta_u, argmax_t, grid_step`.
pub fn cmd_search_beta(args: &SearchBetaArgs) -> Result<CsvTable> {
    let res = with_workers(args.workers, || search_beta_u(args.theta, args.grid_step))?;
    let mut table = CsvTable::new(["theta", "T", "beta_u", "argmax_t", "grid_step"]);
    table.push(vec![
        res.theta.to_string(),
        res.period.to_string(),
        fmt_real(res.beta_u),
        fmt_real(res.argmax_start.x1),
        fmt_real(res.grid_step),
    ]);
    Ok(table)
}

/// Columns `k, mean_sq_norm, std_err, bound_sq, bound_stable`. `bound_sq`
/// is a squared-norm bound; it is empty when the bound diverges or in
/// linf mode.
pub fn cmd_mc(args: &McArgs) -> Result<CsvTable> {
    let cfg = McConfig {
        theta: args.theta,
        alpha: args.alpha,
        x1: args.x1,
        noise: NoiseParams::new(args.noise_a, args.noise_b)?,
        replicas: args.replicas as usize,
        steps: args.steps as usize,
        seed: args.seed,
        norm: args.norm.into(),
    };
    let res = with_workers(args.workers, || run_stochastic_km(&cfg))?;
    let stable = match cfg.norm {
        NormKind::L2 => (!res.unstable).to_string(),
        NormKind::LInf => String::new(),
    };
    let mut table = CsvTable::new(["k", "mean_sq_norm", "std_err", "bound_sq", "bound_stable"]);
    for k in 0..cfg.steps {
        table.push(vec![
            (k + 1).to_string(),
            fmt_real(res.mean_sq_norm[k]),
            fmt_real(res.std_err[k]),
            res.bound
                .as_ref()
                .map(|b| fmt_real(b.values[k]))
                .unwrap_or_default(),
            stable.clone(),
        ]);
    }
    Ok(table)
}

pub fn run(cli: &Cli) -> Result<CsvTable> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bound(a) => cmd_bound(a),
        Command::SearchBeta(a) => cmd_search_beta(a),
        Command::Mc(a) => cmd_mc(a),
    }
}
