//! Runs, convergence ladders, stability sweeps, ablation and penalty calibration.

use cfm_core::march::{CorrectionMode, RegionDiagnostics, SetupError, SimOptions, StepError};
use cfm_core::{Executor, ProblemSpec, Simulation, Tiling};
use thiserror::Error;

use crate::config::StepRule;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("solution exceeded {factor}× the exact maximum at step {step}")]
    Unstable { step: usize, factor: f64 },
    #[error("need at least 3 grid levels, got {0}")]
    TooFewLevels(usize),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Squared-error sum and max error over the grid at one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelError {
    pub t: f64,
    pub sum_sq: f64,
    pub max_abs: f64,
}

pub fn level_error(t: f64, u: &[f64], exact: &[f64]) -> LevelError {
    let mut sum_sq = 0.0;
    let mut max_abs: f64 = 0.0;
    for (a, b) in u.iter().zip(exact) {
        let e = a - b;
        sum_sq += e * e;
        max_abs = max_abs.max(e.abs());
    }
    LevelError { t, sum_sq, max_abs }
}

/// Discrete L2 and L∞ errors over every node and every time level
/// (including t = 0): `L2 = √(ΣΣ e² / (N_x N_t))`, `L∞ = max |e|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub steps: usize,
    pub n_x: usize,
    pub n_t: usize,
    pub l2: f64,
    pub linf: f64,
    pub series: Vec<LevelError>,
}

impl ErrorReport {
    pub fn from_levels(n: usize, dx: f64, dt: f64, n_x: usize, series: Vec<LevelError>) -> Self {
        let n_t = series.len();
        let total: f64 = series.iter().map(|l| l.sum_sq).sum();
        let linf = series.iter().fold(0.0f64, |m, l| m.max(l.max_abs));
        ErrorReport { n, dx, dt, steps: n_t.saturating_sub(1), n_x, n_t, l2: (total / (n_x * n_t) as f64).sqrt(), linf, series }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    pub options: SimOptions,
    /// Keep a snapshot every k steps (0: final state only).
    pub snapshot_every: usize,
    /// Abort when max|u| exceeds this multiple of the running exact maximum.
    pub blowup: Option<f64>,
}

impl RunSpec {
    /// Δt from `rule`, shortened so that an integer number of steps lands on `t_end`.
    pub fn landing(problem: ProblemSpec, n: usize, rule: &StepRule, t_end: f64, options: SimOptions) -> Self {
        let dx = (problem.upper - problem.lower) / n as f64;
        let dt0 = rule.dt(&problem, dx);
        let steps = (t_end / dt0 - 1e-9).ceil().max(0.0) as usize;
        let dt = if steps == 0 { dt0 } else { t_end / steps as f64 };
        RunSpec { problem, n, dt, steps, options, snapshot_every: 0, blowup: None }
    }

    /// Fixed Δt, enough steps to reach `t_end`.
    pub fn fixed(problem: ProblemSpec, n: usize, dt: f64, t_end: f64, options: SimOptions) -> Self {
        let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
        RunSpec { problem, n, dt, steps, options, snapshot_every: 0, blowup: None }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub report: ErrorReport,
    pub snapshots: Vec<Snapshot>,
    pub tiling: Tiling,
    /// Solve diagnostics of the first step.
    pub diagnostics: Vec<RegionDiagnostics>,
    pub grid: cfm_core::Grid,
}

pub fn run<E: Executor>(spec: &RunSpec, exec: &E) -> Result<RunResult, HarnessError> {
    let mut sim = Simulation::new(spec.problem.clone(), spec.n, spec.dt, spec.options, exec)?;
    let diagnostics = sim.diagnostics(exec);
    let grid = sim.grid().clone();
    let mut series = Vec::with_capacity(spec.steps + 1);
    let mut snapshots = Vec::new();
    let mut exact_max: f64 = 0.0;
    for step in 0..=spec.steps {
        if step > 0 {
            sim.step(exec)?;
        }
        let t = sim.time_at(step);
        let exact = sim.exact_u(t);
        let state = sim.state();
        series.push(level_error(t, &state.u, &exact));
        if let Some(factor) = spec.blowup {
            exact_max = exact.iter().fold(exact_max, |m, x| m.max(x.abs()));
            if state.max_abs_u() > factor * exact_max {
                return Err(HarnessError::Unstable { step, factor });
            }
        }
        let keep = if spec.snapshot_every == 0 { step == spec.steps } else { step % spec.snapshot_every == 0 || step == spec.steps };
        if keep {
            snapshots.push(Snapshot { step, t, u: state.u.clone(), v: state.v.clone() });
        }
    }
    let report = ErrorReport::from_levels(spec.n, grid.dx(), spec.dt, grid.node_count(), series);
    Ok(RunResult { report, snapshots, tiling: sim.tiling().clone(), diagnostics, grid })
}

/// Least-squares slope of `ln err` against `ln Δx`.
pub fn fit_order(dx: &[f64], err: &[f64]) -> f64 {
    let n = dx.len() as f64;
    let xs: Vec<f64> = dx.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub reports: Vec<ErrorReport>,
    pub order_l2: f64,
    pub order_linf: f64,
}

impl Convergence {
    pub fn from_reports(reports: Vec<ErrorReport>) -> Self {
        let dx: Vec<f64> = reports.iter().map(|r| r.dx).collect();
        let l2: Vec<f64> = reports.iter().map(|r| r.l2).collect();
        let linf: Vec<f64> = reports.iter().map(|r| r.linf).collect();
        Convergence { order_l2: fit_order(&dx, &l2), order_linf: fit_order(&dx, &linf), reports }
    }
}

pub fn converge<E: Executor>(
    problem: &ProblemSpec,
    ns: &[usize],
    rule: &StepRule,
    t_end: f64,
    options: SimOptions,
    exec: &E,
) -> Result<Convergence, HarnessError> {
    if ns.len() < 3 {
        return Err(HarnessError::TooFewLevels(ns.len()));
    }
    let reports = ns
        .iter()
        .map(|&n| run(&RunSpec::landing(problem.clone(), n, rule, t_end, options), exec).map(|r| r.report))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Convergence::from_reports(reports))
}

/// Modified and naive stage corrections on identical ladders.
pub fn ablation<E: Executor>(
    problem: &ProblemSpec,
    ns: &[usize],
    rule: &StepRule,
    t_end: f64,
    options: SimOptions,
    exec: &E,
) -> Result<(Convergence, Convergence), HarnessError> {
    let modified = converge(problem, ns, rule, t_end, SimOptions { mode: CorrectionMode::Modified, ..options }, exec)?;
    let naive = converge(problem, ns, rule, t_end, SimOptions { mode: CorrectionMode::Naive, ..options }, exec)?;
    Ok((modified, naive))
}

/// Blow-up threshold relative to the exact solution's maximum.
pub const BLOWUP_FACTOR: f64 = 10.0;
pub const BISECTION_STEPS: usize = 8;

/// One probe: marches one period at `Δt = γΔx` and reports whether it stayed bounded.
pub fn is_stable<E: Executor>(problem: &ProblemSpec, n: usize, gamma: f64, options: SimOptions, exec: &E) -> Result<bool, HarnessError> {
    let dx = (problem.upper - problem.lower) / n as f64;
    let mut spec = RunSpec::fixed(problem.clone(), n, gamma * dx, problem.period, options);
    spec.blowup = Some(BLOWUP_FACTOR);
    match run(&spec, exec) {
        Ok(_) => Ok(true),
        Err(HarnessError::Unstable { .. }) | Err(HarnessError::Step(StepError::NonFinite { .. })) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Bisection for the largest stable `γ = Δt/Δx` in `[lo, hi]`.
pub fn stability_sweep<E: Executor>(problem: &ProblemSpec, n: usize, bracket: (f64, f64), options: SimOptions, exec: &E) -> Result<f64, HarnessError> {
    let (mut lo, mut hi) = bracket;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if is_stable(problem, n, mid, options, exec)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection bracket: `[1.0, 1.5]` for the unit-speed 1D limit, scaled with the
/// theoretical limit otherwise.
pub fn default_bracket(problem: &ProblemSpec) -> (f64, f64) {
    let s = cfm_core::march::stability_limit(problem.c, problem.dim) / cfm_core::march::stability_limit(1.0, 1);
    (s, 1.5 * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRow {
    pub n: usize,
    pub gamma_t: f64,
    pub gamma_c: f64,
    pub gamma_cfm: f64,
}

pub fn stability_table<E: Executor>(problem: &ProblemSpec, ns: &[usize], options: SimOptions, exec: &E) -> Result<Vec<StabilityRow>, HarnessError> {
    let bracket = default_bracket(problem);
    let continuous = problem.continuous();
    ns.iter()
        .map(|&n| {
            Ok(StabilityRow {
                n,
                gamma_t: cfm_core::march::stability_limit(problem.c, problem.dim),
                gamma_c: stability_sweep(&continuous, n, bracket, options, exec)?,
                gamma_cfm: stability_sweep(problem, n, bracket, options, exec)?,
            })
        })
        .collect()
}

pub const CALIBRATION_VALUES: [f64; 3] = [1e-2, 1.0, 1e2];

/// Picks `(c1, c2)` from the calibration grid minimising the L2 error of a
/// coarse run. Ties keep the earlier pair.
pub fn calibrate<E: Executor>(
    problem: &ProblemSpec,
    n: usize,
    rule: &StepRule,
    t_end: f64,
    options: SimOptions,
    exec: &E,
) -> Result<(f64, f64, f64), HarnessError> {
    let mut best = (options.params.c1, options.params.c2, f64::INFINITY);
    for &c1 in &CALIBRATION_VALUES {
        for &c2 in &CALIBRATION_VALUES {
            let mut opts = options;
            opts.params.c1 = c1;
            opts.params.c2 = c2;
            let l2 = match run(&RunSpec::landing(problem.clone(), n, rule, t_end, opts), exec) {
                Ok(r) => r.report.l2,
                Err(HarnessError::Setup(SetupError::Solve(_))) | Err(HarnessError::Step(_)) => continue,
                Err(e) => return Err(e),
            };
            if l2 < best.2 {
                best = (c1, c2, l2);
            }
        }
    }
    Ok(best)
}
