//! RK4 time stepping of `u_t = v`, `v_t = c²(∇²u − f)` with stage-consistent
//! correction sources.
//!
//! Each RK4 stage reads its own altered form of D: with `D, D′, D″, D‴` taken
//! at `tₙ`, the stages use
//!
//! ```text
//! k1: D
//! k2: D + Δt/2 D′
//! k3: D + Δt/2 D′ + Δt²/4 D″
//! k4: D + Δt D′ + Δt²/2 D″ + Δt³/4 D‴
//! ```
//!
//! The naive variant instead evaluates D at `tₙ`, `tₙ₊½` (twice) and `tₙ₊₁`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::cfsolve::{CfParams, CfSystem, RegionOperator, SolveError};
use crate::exec::Executor;
use crate::geometry::{Side, Vec2};
use crate::grid::{classify_nodes, Grid, GridError, SideMap, WaveState};
use crate::interp::{basis_local, dof_count, InterpError, SpaceTimeInterpolant, DOF_2D};
use crate::math;
use crate::problems::ProblemSpec;
use crate::regions::{build_tiling, RegionError, Tiling, DEFAULT_L_FACTOR};
use crate::stencil::{correction_source, laplacian_field, tap_weight};

/// Coefficients of `Δtᵏ ∂ₜᵏD` in each stage's altered form.
pub const MODIFIED_STAGE_COEFFS: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [1.0, 0.5, 0.0, 0.0],
    [1.0, 0.5, 0.25, 0.0],
    [1.0, 1.0, 0.5, 0.25],
];

/// Time fraction at which the naive variant samples D in each stage.
pub const NAIVE_STAGE_TIMES: [f64; 4] = [0.0, 0.5, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionMode {
    Modified,
    Naive,
}

/// Where D comes from: the least-squares solve, or the exact `u⁺ − u⁻` of a
/// manufactured problem (isolates the stage logic from solve error).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionSource {
    Solved,
    Exact,
}

/// D̂ for the four RK4 stages at one tap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageCorrectionSet {
    pub values: [f64; 4],
}

/// Altered forms from `[D, ∂ₜD, ∂ₜ²D, ∂ₜ³D]` at `tₙ`.
pub fn modified_from_derivatives(d: [f64; 4], dt: f64) -> StageCorrectionSet {
    let scaled = [d[0], dt * d[1], dt * dt * d[2], dt * dt * dt * d[3]];
    let mut values = [0.0; 4];
    for (s, coeffs) in MODIFIED_STAGE_COEFFS.iter().enumerate() {
        values[s] = coeffs.iter().zip(scaled).map(|(c, v)| c * v).sum();
    }
    StageCorrectionSet { values }
}

pub fn stage_corrections(interp: &SpaceTimeInterpolant, tap: Vec2, t0: f64, dt: f64) -> Result<StageCorrectionSet, InterpError> {
    let mut d = [0.0; 4];
    for (k, v) in d.iter_mut().enumerate() {
        *v = interp.partial([0, 0, k], tap, t0)?;
    }
    Ok(modified_from_derivatives(d, dt))
}

pub fn naive_corrections(interp: &SpaceTimeInterpolant, tap: Vec2, t0: f64, dt: f64) -> Result<StageCorrectionSet, InterpError> {
    let mut values = [0.0; 4];
    for (s, frac) in NAIVE_STAGE_TIMES.iter().enumerate() {
        values[s] = interp.eval(tap, t0 + frac * dt)?;
    }
    Ok(StageCorrectionSet { values })
}

/// Largest stable `Δt/Δx`: the RK4 imaginary-axis bound `2√2` over the
/// spectral radius of the five-point operator, `(16/3)/Δx²` per axis.
pub fn stability_limit(c: f64, dim: usize) -> f64 {
    2.0 * math::sqrt(2.0) / (c * math::sqrt(16.0 * dim as f64 / 3.0))
}

/// One classical RK4 step. `forcing` holds f at `tₙ`, `tₙ₊½`, `tₙ₊₁`;
/// `sources` adds a per-stage constant to the Laplacian of listed nodes.
pub fn rk4_step(
    state: &WaveState,
    grid: &Grid,
    c: f64,
    dt: f64,
    forcing: [&[f64]; 3],
    sources: &[(usize, [f64; 4])],
) -> WaveState {
    let n = state.u.len();
    let c2 = c * c;
    let mut lap = alloc::vec![0.0; n];
    let mut stage_u = alloc::vec![0.0; n];
    let mut ku = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let mut kv = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let fidx = [0usize, 1, 1, 2];
    let frac = [0.0, 0.5, 0.5, 1.0];
    for s in 0..4 {
        let (u_s, v_s): (&[f64], Vec<f64>) = if s == 0 {
            (&state.u, state.v.clone())
        } else {
            let h = frac[s] * dt;
            for i in 0..n {
                stage_u[i] = state.u[i] + h * ku[s - 1][i];
            }
            (&stage_u, (0..n).map(|i| state.v[i] + h * kv[s - 1][i]).collect())
        };
        laplacian_field(u_s, grid, &mut lap);
        for &(node, src) in sources {
            lap[node] += src[s];
        }
        let f = forcing[fidx[s]];
        kv[s] = (0..n).map(|i| c2 * (lap[i] - f[i])).collect();
        ku[s] = v_s;
    }
    let w = dt / 6.0;
    let u = (0..n).map(|i| state.u[i] + w * (ku[0][i] + 2.0 * ku[1][i] + 2.0 * ku[2][i] + ku[3][i])).collect();
    let v = (0..n).map(|i| state.v[i] + w * (kv[0][i] + 2.0 * kv[1][i] + 2.0 * kv[2][i] + kv[3][i])).collect();
    WaveState { u, v, t: state.t + dt }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub l_factor: f64,
    pub params: CfParams,
    pub mode: CorrectionMode,
    pub source: CorrectionSource,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { l_factor: DEFAULT_L_FACTOR, params: CfParams::default(), mode: CorrectionMode::Modified, source: CorrectionSource::Solved }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetupError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error("time step must be positive and finite, got {0}")]
    TimeStep(f64),
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum StepError {
    #[error("solution became non-finite at step {step}")]
    NonFinite { step: usize },
}

/// Correction bookkeeping of one affected node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeCorrection {
    pub node: usize,
    pub side: Side,
    /// Opposite taps: position and signed stencil weight.
    pub taps: Vec<(Vec2, f64)>,
    /// Row-major `4 × ndof`: maps region weights to the four stage sources.
    pub stage_rows: Vec<f64>,
    /// Row-major `4 × rows`: maps the region's quadrature data straight to
    /// the stage sources. Empty unless corrections are solved.
    pub stage_map: Vec<f64>,
}

/// Per-region solve diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionDiagnostics {
    pub node: usize,
    pub cond: f64,
    pub j_min: f64,
    pub w_norm: f64,
}

/// A manufactured problem marched on a periodic grid.
#[derive(Debug, Clone)]
pub struct Simulation {
    problem: ProblemSpec,
    grid: Grid,
    sidemap: SideMap,
    tiling: Tiling,
    operators: Vec<RegionOperator>,
    corrections: Vec<NodeCorrection>,
    options: SimOptions,
    dt: f64,
    step: usize,
    state: WaveState,
    forcing_next: Option<Vec<f64>>,
}

impl Simulation {
    pub fn new<E: Executor>(problem: ProblemSpec, n: usize, dt: f64, options: SimOptions, exec: &E) -> Result<Self, SetupError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SetupError::TimeStep(dt));
        }
        let grid = Grid::new(problem.dim, [problem.lower; 2], [problem.upper; 2], n)?;
        let (sidemap, tiling) = match &problem.curve {
            Some(curve) => {
                let sidemap = classify_nodes(&grid, curve);
                let tiling = build_tiling(&sidemap, curve, &grid, options.l_factor, dt, exec)?;
                (sidemap, tiling)
            }
            None => (SideMap::uniform(&grid, Side::Minus), Tiling::empty(options.l_factor, dt)),
        };
        let operators = match (&problem.curve, options.source) {
            (Some(curve), CorrectionSource::Solved) => exec
                .map(tiling.len(), |k| RegionOperator::build(&tiling.regions[k], curve, problem.c, &options.params))
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?,
            _ => Vec::new(),
        };
        let mut corrections = tiling
            .regions
            .iter()
            .map(|r| {
                let side = sidemap.side(r.node);
                let taps: Vec<(Vec2, f64)> = r
                    .taps
                    .iter()
                    .map(|t| (t.position, correction_source(side, tap_weight(t.offset, grid.dx()), 1.0)))
                    .collect();
                let stage_rows = stage_rows(&r.bbox, &taps, options.mode)?;
                Ok(NodeCorrection { node: r.node, side, taps, stage_rows, stage_map: Vec::new() })
            })
            .collect::<Result<Vec<_>, InterpError>>()?;
        let maps = exec.map(operators.len(), |k| operators[k].compose(&corrections[k].stage_rows, 4));
        for (corr, map) in corrections.iter_mut().zip(maps) {
            corr.stage_map = map;
        }
        let mut state = WaveState::zeros(grid.node_count(), 0.0);
        for k in 0..grid.node_count() {
            let p = grid.coords(k);
            let side = sidemap.side(k);
            state.u[k] = problem.u(side, p, 0.0);
            state.v[k] = problem.ut(side, p, 0.0);
        }
        Ok(Simulation { problem, grid, sidemap, tiling, operators, corrections, options, dt, step: 0, state, forcing_next: None })
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sidemap(&self) -> &SideMap {
        &self.sidemap
    }

    pub fn tiling(&self) -> &Tiling {
        &self.tiling
    }

    pub fn operators(&self) -> &[RegionOperator] {
        &self.operators
    }

    pub fn corrections(&self) -> &[NodeCorrection] {
        &self.corrections
    }

    pub fn options(&self) -> &SimOptions {
        &self.options
    }

    pub fn state(&self) -> &WaveState {
        &self.state
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// `n·Δt`, computed without accumulation.
    pub fn time_at(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    /// Exact solution on the grid, each node on its own branch.
    pub fn exact_u(&self, t: f64) -> Vec<f64> {
        (0..self.grid.node_count()).map(|k| self.problem.u(self.sidemap.side(k), self.grid.coords(k), t)).collect()
    }

    fn forcing_field(&self, t: f64) -> Vec<f64> {
        (0..self.grid.node_count()).map(|k| self.problem.forcing(self.sidemap.side(k), self.grid.coords(k), t)).collect()
    }

    /// Least-squares weights of every region for the slab starting at `t0`.
    pub fn region_weights<E: Executor>(&self, t0: f64, exec: &E) -> Vec<Vec<f64>> {
        exec.map(self.operators.len(), |k| {
            let op = &self.operators[k];
            op.solve_weights(&op.rhs(&self.problem, t0))
        })
    }

    /// Interpolant of D on the region of `k`-th affected node at slab `t0`.
    pub fn interpolant(&self, k: usize, weights: Vec<f64>, t0: f64) -> SpaceTimeInterpolant {
        SpaceTimeInterpolant::new(self.tiling.regions[k].at_time(t0).bbox, weights)
    }

    /// Stage sources of every affected node for the step starting at `t0`.
    pub fn stage_sources<E: Executor>(&self, t0: f64, exec: &E) -> Vec<(usize, [f64; 4])> {
        match self.options.source {
            CorrectionSource::Solved => exec.map(self.corrections.len(), |k| {
                let y = self.operators[k].rhs(&self.problem, t0);
                let corr = &self.corrections[k];
                let mut src = [0.0; 4];
                for (v, row) in src.iter_mut().zip(corr.stage_map.chunks(y.len())) {
                    *v = row.iter().zip(&y).map(|(a, b)| a * b).sum();
                }
                (corr.node, src)
            }),
            CorrectionSource::Exact => exec.map(self.corrections.len(), |k| {
                let corr = &self.corrections[k];
                let mut src = [0.0; 4];
                for &(p, weight) in &corr.taps {
                    let values = match self.options.mode {
                        CorrectionMode::Modified => {
                            let d = [0, 1, 2, 3].map(|j| self.problem.correction_time_derivative(p, t0, j));
                            modified_from_derivatives(d, self.dt).values
                        }
                        CorrectionMode::Naive => NAIVE_STAGE_TIMES.map(|f| self.problem.alpha(p, t0 + f * self.dt)),
                    };
                    for s in 0..4 {
                        src[s] += weight * values[s];
                    }
                }
                (corr.node, src)
            }),
        }
    }

    /// Advances one step of length Δt.
    pub fn step<E: Executor>(&mut self, exec: &E) -> Result<(), StepError> {
        let t0 = self.time_at(self.step);
        let t1 = self.time_at(self.step + 1);
        let f0 = self.forcing_next.take().unwrap_or_else(|| self.forcing_field(t0));
        let fh = self.forcing_field(0.5 * (t0 + t1));
        let f1 = self.forcing_field(t1);
        let sources = self.stage_sources(t0, exec);
        let mut next = rk4_step(&self.state, &self.grid, self.problem.c, self.dt, [&f0, &fh, &f1], &sources);
        next.t = t1;
        self.step += 1;
        self.forcing_next = Some(f1);
        self.state = next;
        if !self.state.is_finite() {
            return Err(StepError::NonFinite { step: self.step });
        }
        Ok(())
    }

    /// Condition number, minimum of the functional and weight norm per region
    /// for the slab starting at the current time.
    pub fn diagnostics<E: Executor>(&self, exec: &E) -> Vec<RegionDiagnostics> {
        let t0 = self.time_at(self.step);
        exec.map(self.operators.len(), |k| {
            let op = &self.operators[k];
            let y = op.rhs(&self.problem, t0);
            let w = op.solve_weights(&y);
            let sys: CfSystem = op.system(&y);
            RegionDiagnostics {
                node: op.node,
                cond: op.cond,
                j_min: sys.residual(&w),
                w_norm: math::sqrt(w.iter().map(|x| x * x).sum()),
            }
        })
    }
}

/// `4 × ndof` map from region weights to the summed, signed stage sources.
fn stage_rows(bbox: &crate::interp::LocalBox, taps: &[(Vec2, f64)], mode: CorrectionMode) -> Result<Vec<f64>, InterpError> {
    let n = dof_count(bbox.dim);
    let mut rows = alloc::vec![0.0; 4 * n];
    let mut basis = [0.0; DOF_2D];
    for &(p, weight) in taps {
        let interp = SpaceTimeInterpolant::new(*bbox, alloc::vec![0.0; n]);
        interp.eval(p, bbox.t0)?;
        let mut local = bbox.to_local(p, bbox.t0);
        for s in 0..4 {
            match mode {
                CorrectionMode::Modified => {
                    // Δtᵏ ∂ₜᵏ = ∂τᵏ, so the coefficients apply to unit-box derivatives.
                    for (k, &coef) in MODIFIED_STAGE_COEFFS[s].iter().enumerate() {
                        if coef == 0.0 {
                            continue;
                        }
                        local[2] = 0.0;
                        basis_local(bbox.dim, local, [0, 0, k], &mut basis[..n]);
                        for j in 0..n {
                            rows[s * n + j] += weight * coef * basis[j];
                        }
                    }
                }
                CorrectionMode::Naive => {
                    local[2] = NAIVE_STAGE_TIMES[s];
                    basis_local(bbox.dim, local, [0, 0, 0], &mut basis[..n]);
                    for j in 0..n {
                        rows[s * n + j] += weight * basis[j];
                    }
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use crate::interp::LocalBox;
    use crate::problems::problem_1d_two_interfaces;

    fn time_box() -> LocalBox {
        LocalBox { dim: 1, origin: Vec2::ZERO, axes: [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)], side: 1.0, t0: 0.0, dt: 0.1, margin: [0.0, 0.0] }
    }

    /// Interpolant of g(t) (constant in x) with g, g′ known at the slab ends.
    fn in_time(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64) -> SpaceTimeInterpolant {
        let b = time_box();
        SpaceTimeInterpolant::encode(b, |c, slot| match slot {
            [0, _, 0] => g(c[2] * b.dt),
            [0, _, 1] => dg(c[2] * b.dt) * b.dt,
            _ => 0.0,
        })
    }

    #[test]
    fn stage_values_for_t_squared() {
        let f = in_time(|t| t * t, |t| 2.0 * t);
        let s = stage_corrections(&f, Vec2::new(0.5, 0.0), 0.0, 0.1).unwrap().values;
        let expected = [0.0, 0.0, 0.005, 0.01];
        for k in 0..4 {
            assert!((s[k] - expected[k]).abs() < 1e-15, "{s:?}");
        }
    }

    #[test]
    fn stage_values_for_t_cubed() {
        let f = in_time(|t| t * t * t, |t| 3.0 * t * t);
        let s = stage_corrections(&f, Vec2::new(0.5, 0.0), 0.0, 0.1).unwrap().values;
        assert!(s[0].abs() < 1e-15 && s[1].abs() < 1e-15 && s[2].abs() < 1e-15);
        assert!((s[3] - 1.5e-3).abs() < 1e-15, "{s:?}");
    }

    #[test]
    fn constant_correction_is_stage_independent() {
        let f = in_time(|_| 2.5, |_| 0.0);
        let p = Vec2::new(0.3, 0.0);
        assert_eq!(stage_corrections(&f, p, 0.0, 0.1).unwrap().values, [2.5; 4]);
        assert_eq!(naive_corrections(&f, p, 0.0, 0.1).unwrap().values, [2.5; 4]);
    }

    #[test]
    fn one_dimensional_limit_is_root_six_over_two() {
        assert!((stability_limit(1.0, 1) - 6f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((stability_limit(1.0, 2) - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((stability_limit(core::f64::consts::FRAC_1_SQRT_2, 2) - 6f64.sqrt() / 2.0).abs() < 1e-15);
        // Spectral radius of the five-point symbol by dense scan.
        let max = (0..=10_000)
            .map(|k| {
                let th = core::f64::consts::PI * k as f64 / 10_000.0;
                ((-2.0 * (2.0 * th).cos() + 32.0 * th.cos() - 30.0) / 12.0).abs()
            })
            .fold(0.0, f64::max);
        assert!((max - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_is_preserved() {
        let g = Grid::square(0.0, 1.0, 10).unwrap();
        let s = WaveState { u: alloc::vec![3.0; 100], v: alloc::vec![0.0; 100], t: 0.0 };
        let zero = alloc::vec![0.0; 100];
        let next = rk4_step(&s, &g, 1.0, 0.05, [&zero, &zero, &zero], &[]);
        assert_eq!(next.u, s.u);
        assert_eq!(next.v, s.v);
    }

    #[test]
    fn smooth_step_error_is_fifth_order() {
        // u = sin(2πx)cos(2πt), c = 1, no interface.
        let err = |dt: f64| {
            let g = Grid::line(0.0, 1.0, 400).unwrap();
            let pi2 = 2.0 * core::f64::consts::PI;
            let u = |t: f64| (0..400).map(|i| (pi2 * g.coords(i).x).sin() * (pi2 * t).cos()).collect::<Vec<_>>();
            let v = |t: f64| (0..400).map(|i| -pi2 * (pi2 * g.coords(i).x).sin() * (pi2 * t).sin()).collect::<Vec<_>>();
            let t0 = 0.1;
            let s = WaveState { u: u(t0), v: v(t0), t: t0 };
            let zero = alloc::vec![0.0; 400];
            let next = rk4_step(&s, &g, 1.0, dt, [&zero, &zero, &zero], &[]);
            // Compare against the semi-discrete exact solution (symbol of the stencil).
            let h = g.dx();
            let th = pi2 * h;
            let lam = (-2.0 * (2.0 * th).cos() + 32.0 * th.cos() - 30.0) / (12.0 * h * h);
            let w = (-lam).sqrt();
            (0..400)
                .map(|i| {
                    let a = (pi2 * g.coords(i).x).sin();
                    let exact = a * (w * (t0 + dt)).cos() * (pi2 * t0).cos() / (w * t0).cos();
                    (next.u[i] - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio.log2() - 5.0).abs() < 0.3, "local order {}", ratio.log2());
    }

    #[test]
    fn fast_stage_rows_match_interpolant_path() {
        let p = problem_1d_two_interfaces();
        for mode in [CorrectionMode::Modified, CorrectionMode::Naive] {
            let opts = SimOptions { mode, ..SimOptions::default() };
            let sim = Simulation::new(p.clone(), 50, 0.02, opts, &Serial).unwrap();
            let t0 = 0.26;
            let weights = sim.region_weights(t0, &Serial);
            let fast = sim.stage_sources(t0, &Serial);
            for (k, w) in weights.into_iter().enumerate() {
                let f = sim.interpolant(k, w, t0);
                let mut slow = [0.0; 4];
                for &(tap, weight) in &sim.corrections()[k].taps {
                    let set = match mode {
                        CorrectionMode::Modified => stage_corrections(&f, tap, t0, sim.dt()).unwrap(),
                        CorrectionMode::Naive => naive_corrections(&f, tap, t0, sim.dt()).unwrap(),
                    };
                    for s in 0..4 {
                        slow[s] += weight * set.values[s];
                    }
                }
                for s in 0..4 {
                    assert!((fast[k].1[s] - slow[s]).abs() <= 1e-9 * slow[s].abs().max(1.0), "{mode:?} {:?} vs {slow:?}", fast[k].1);
                }
            }
        }
    }

    #[test]
    fn no_interface_modes_agree() {
        let p = problem_1d_two_interfaces().continuous();
        let mut a = Simulation::new(p.clone(), 40, 0.02, SimOptions::default(), &Serial).unwrap();
        let mut b = Simulation::new(p, 40, 0.02, SimOptions { mode: CorrectionMode::Naive, ..SimOptions::default() }, &Serial).unwrap();
        for _ in 0..5 {
            a.step(&Serial).unwrap();
            b.step(&Serial).unwrap();
        }
        assert_eq!(a.state(), b.state());
    }
}
