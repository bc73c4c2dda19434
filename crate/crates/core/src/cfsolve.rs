//! Least-squares solve for the correction function on one region.
//!
//! The functional
//!
//! ```text
//! J_p = l_c³ ∫∫ [∇²D − D_tt/c² − f_d]² dV dt
//!     + c1   ∫∫ [D − α]² dΓ dt
//!     + c2 l_c² ∫∫ [∂D/∂n − β]² dΓ dt
//! ```
//!
//! is discretised with 6-point Gauss rules and written as `‖A w − y‖²`, where
//! each row of `A` is a basis functional scaled by the square root of its
//! quadrature weight. Only `y` depends on time, so `A` and its factorisation
//! are built once per region and reused every step.

use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::{CurveSegment, InterfaceCurve, Vec2};
use crate::interp::{basis_local, dof_count, DOF_2D};
use crate::math;
use crate::problems::ProblemSpec;
use crate::regions::Region;

/// Gauss–Legendre rule on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule {
    pub nodes: [f64; 6],
    pub weights: [f64; 6],
}

/// Six-point Gauss–Legendre nodes and weights mapped to [0, 1], ascending.
pub fn gauss_rule() -> QuadratureRule {
    const X: [f64; 3] = [0.238_619_186_083_196_9, 0.661_209_386_466_264_5, 0.932_469_514_203_152_0];
    const W: [f64; 3] = [0.467_913_934_572_691_0, 0.360_761_573_048_138_6, 0.171_324_492_379_170_3];
    let mut nodes = [0.0; 6];
    let mut weights = [0.0; 6];
    for k in 0..3 {
        nodes[2 - k] = 0.5 * (1.0 - X[k]);
        weights[2 - k] = 0.5 * W[k];
        nodes[3 + k] = 0.5 * (1.0 + X[k]);
        weights[3 + k] = 0.5 * W[k];
    }
    QuadratureRule { nodes, weights }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Cholesky factorisation of `AᵀA`.
    NormalEquations,
    /// Householder QR of `A`.
    Qr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfParams {
    pub c1: f64,
    pub c2: f64,
    pub method: SolveMethod,
    /// Largest accepted condition number of `M = AᵀA`.
    pub cond_limit: f64,
    /// Normal-equation regions with `cond(M)` above this are refactored by QR.
    pub qr_fallback: f64,
}

impl Default for CfParams {
    fn default() -> Self {
        CfParams { c1: 1.0, c2: 1.0, method: SolveMethod::NormalEquations, cond_limit: 1e14, qr_fallback: 1e8 }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum SolveError {
    #[error("region of node {node} contains no interface")]
    EmptyInterface { node: usize },
    #[error("region of node {node} is ill-conditioned (cond(M) = {cond:.3e})")]
    IllConditioned { node: usize, cond: f64 },
    #[error("normal matrix of node {node} is not positive definite")]
    NotPositiveDefinite { node: usize },
    #[error("penalty coefficients must be positive, got c1 = {c1}, c2 = {c2}")]
    Penalty { c1: f64, c2: f64 },
}

/// What a quadrature row measures; the data term is evaluated per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowKind {
    Volume,
    Dirichlet,
    Neumann { normal: Vec2 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub kind: RowKind,
    pub point: Vec2,
    /// Fraction of the time slab, in [0, 1].
    pub tau: f64,
    /// Square root of quadrature weight × measure × penalty.
    pub scale: f64,
}

/// Normal-equation form of the functional: `J(w) = wᵀMw − 2bᵀw + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfSystem {
    pub ndof: usize,
    /// Row-major `ndof × ndof`.
    pub m: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl CfSystem {
    pub fn residual(&self, w: &[f64]) -> f64 {
        let n = self.ndof;
        let mut quad = 0.0;
        for i in 0..n {
            let row = &self.m[i * n..(i + 1) * n];
            quad += w[i] * row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        }
        quad - 2.0 * self.b.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + self.c
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Factor {
    /// Lower-triangular Cholesky factor of M, row-major.
    Cholesky(Vec<f64>),
    /// Householder vectors (stored below the diagonal of `qr`), their
    /// `τ` coefficients and `R` on and above the diagonal.
    Qr { qr: Vec<f64>, tau: Vec<f64> },
}

/// Design matrix and factorisation of one region's least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOperator {
    pub node: usize,
    pub ndof: usize,
    pub rows: Vec<Row>,
    /// Row-major `rows.len() × ndof`.
    pub design: Vec<f64>,
    /// Estimated condition number of `M` after column equilibration.
    pub cond: f64,
    /// Time-slab length the rows were built for.
    pub dt: f64,
    /// Column norms of `design`; the factorisation is of `design · diag(1/scale)`.
    scale: Vec<f64>,
    factor: Factor,
}

/// Splits segments at corner parameters so each quadrature panel is smooth.
fn smooth_panels(curve: &InterfaceCurve, segments: &[CurveSegment]) -> Vec<(f64, f64)> {
    let (lo, hi) = curve.param_range();
    let period = hi - lo;
    let corners = curve.corner_parameters();
    let mut out = Vec::new();
    for s in segments {
        let mut cuts = alloc::vec![s.theta_a];
        for &c in &corners {
            for shift in [-period, 0.0, period] {
                let t = c + shift;
                if t > s.theta_a + 1e-12 && t < s.theta_b - 1e-12 {
                    cuts.push(t);
                }
            }
        }
        cuts.push(s.theta_b);
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            out.push((w[0], w[1]));
        }
    }
    out
}

/// Quadrature rows of the functional on `region` (time slab of length `dt`).
pub fn build_rows(region: &Region, curve: &InterfaceCurve, params: &CfParams) -> Vec<Row> {
    let rule = gauss_rule();
    let bbox = &region.bbox;
    let dim = bbox.dim;
    let l = bbox.side;
    let lc = l;
    let dt = bbox.dt;
    let mut rows = Vec::new();

    let ny = if dim == 2 { 6 } else { 1 };
    let area = if dim == 2 { l * l } else { l };
    for a in 0..6 {
        for b in 0..ny {
            let (eta, wy) = if dim == 2 { (rule.nodes[b], rule.weights[b]) } else { (0.0, 1.0) };
            let (p, _) = bbox.to_physical([rule.nodes[a], eta, 0.0]);
            for c in 0..6 {
                let w = rule.weights[a] * wy * rule.weights[c] * area * dt * lc * lc * lc;
                rows.push(Row { kind: RowKind::Volume, point: p, tau: rule.nodes[c], scale: math::sqrt(w) });
            }
        }
    }

    let mut push_interface = |p: Vec2, normal: Vec2, measure: f64| {
        for c in 0..6 {
            let w = rule.weights[c] * dt * measure;
            rows.push(Row { kind: RowKind::Dirichlet, point: p, tau: rule.nodes[c], scale: math::sqrt(w * params.c1) });
            rows.push(Row { kind: RowKind::Neumann { normal }, point: p, tau: rule.nodes[c], scale: math::sqrt(w * params.c2 * lc * lc) });
        }
    };
    if dim == 1 {
        for s in &region.segments {
            let theta = s.theta_a;
            push_interface(curve.position(theta), curve.one_sided_frame(theta).normal, 1.0);
        }
    } else {
        for (ta, tb) in smooth_panels(curve, &region.segments) {
            let h = tb - ta;
            if h <= 0.0 {
                continue;
            }
            for q in 0..6 {
                let theta = ta + h * rule.nodes[q];
                let jac = curve.derivative(theta).norm();
                push_interface(curve.position(theta), curve.one_sided_frame(theta).normal, rule.weights[q] * h * jac);
            }
        }
    }
    rows
}

/// Basis functional of one row, written into `out` (length `ndof`).
fn row_functional(region: &Region, row: &Row, c: f64, out: &mut [f64]) {
    let bbox = &region.bbox;
    let n = dof_count(bbox.dim);
    let mut local = bbox.to_local(row.point, bbox.t0);
    local[2] = row.tau;
    let l = bbox.side;
    let mut tmp = [0.0; DOF_2D];
    match row.kind {
        RowKind::Volume => {
            basis_local(bbox.dim, local, [2, 0, 0], out);
            if bbox.dim == 2 {
                basis_local(bbox.dim, local, [0, 2, 0], &mut tmp[..n]);
                for k in 0..n {
                    out[k] += tmp[k];
                }
            }
            basis_local(bbox.dim, local, [0, 0, 2], &mut tmp[..n]);
            let st = 1.0 / (c * c * bbox.dt * bbox.dt);
            for k in 0..n {
                out[k] = out[k] / (l * l) - st * tmp[k];
            }
        }
        RowKind::Dirichlet => basis_local(bbox.dim, local, [0, 0, 0], out),
        RowKind::Neumann { normal } => {
            let a = normal.dot(bbox.axes[0]) / l;
            basis_local(bbox.dim, local, [1, 0, 0], out);
            for v in out.iter_mut() {
                *v *= a;
            }
            if bbox.dim == 2 {
                let b = normal.dot(bbox.axes[1]) / l;
                basis_local(bbox.dim, local, [0, 1, 0], &mut tmp[..n]);
                for k in 0..n {
                    out[k] += b * tmp[k];
                }
            }
        }
    }
    for v in out.iter_mut() {
        *v *= row.scale;
    }
}

/// Right-hand side of the rows for the slab starting at `t0`.
pub fn rows_rhs(rows: &[Row], problem: &ProblemSpec, t0: f64, dt: f64) -> Vec<f64> {
    rows.iter()
        .map(|r| {
            let t = t0 + r.tau * dt;
            let data = match r.kind {
                RowKind::Volume => problem.forcing_difference(r.point, t),
                RowKind::Dirichlet => problem.alpha(r.point, t),
                RowKind::Neumann { normal } => problem.beta(r.point, normal, t),
            };
            r.scale * data
        })
        .collect()
}

impl RegionOperator {
    pub fn build(region: &Region, curve: &InterfaceCurve, c: f64, params: &CfParams) -> Result<Self, SolveError> {
        if !(params.c1 > 0.0 && params.c2 > 0.0) {
            return Err(SolveError::Penalty { c1: params.c1, c2: params.c2 });
        }
        if region.segments.is_empty() {
            return Err(SolveError::EmptyInterface { node: region.node });
        }
        let node = region.node;
        let ndof = dof_count(region.bbox.dim);
        let rows = build_rows(region, curve, params);
        let mut design = alloc::vec![0.0; rows.len() * ndof];
        for (r, row) in rows.iter().enumerate() {
            row_functional(region, row, c, &mut design[r * ndof..(r + 1) * ndof]);
        }
        let scale = column_norms(&design, ndof);
        let mut scaled = design.clone();
        for row in scaled.chunks_mut(ndof) {
            for (a, s) in row.iter_mut().zip(&scale) {
                *a /= s;
            }
        }
        let (factor, cond) = match params.method {
            SolveMethod::NormalEquations => {
                let (l, cond) = factor_normal(&scaled, ndof, node)?;
                if cond > params.qr_fallback {
                    factor_qr(&scaled, rows.len(), ndof, node)?
                } else {
                    (Factor::Cholesky(l), cond)
                }
            }
            SolveMethod::Qr => factor_qr(&scaled, rows.len(), ndof, node)?,
        };
        if !(cond <= params.cond_limit) {
            return Err(SolveError::IllConditioned { node, cond });
        }
        Ok(RegionOperator { node, ndof, rows, design, cond, dt: region.bbox.dt, scale, factor })
    }

    /// Whether the weights come from a QR factorisation of the design matrix.
    pub fn uses_qr(&self) -> bool {
        matches!(self.factor, Factor::Qr { .. })
    }

    pub fn rhs(&self, problem: &ProblemSpec, t0: f64) -> Vec<f64> {
        rows_rhs(&self.rows, problem, t0, self.dt)
    }

    /// Minimiser of `‖A w − y‖²`.
    pub fn solve_weights(&self, y: &[f64]) -> Vec<f64> {
        let n = self.ndof;
        let mut w = match &self.factor {
            Factor::Cholesky(l) => {
                let mut b = alloc::vec![0.0; n];
                for (r, &yr) in y.iter().enumerate() {
                    let row = &self.design[r * n..(r + 1) * n];
                    for k in 0..n {
                        b[k] += row[k] / self.scale[k] * yr;
                    }
                }
                cholesky_solve(l, n, &b)
            }
            Factor::Qr { qr, tau } => {
                let m = self.rows.len();
                let mut z = y.to_vec();
                for k in 0..n {
                    let mut s = z[k];
                    for i in k + 1..m {
                        s += qr[i * n + k] * z[i];
                    }
                    s *= tau[k];
                    z[k] -= s;
                    for i in k + 1..m {
                        z[i] -= s * qr[i * n + k];
                    }
                }
                r_solve(qr, n, &z[..n])
            }
        };
        for (x, s) in w.iter_mut().zip(&self.scale) {
            *x /= s;
        }
        w
    }

    /// Row-major `k × rows` matrix `G` with `G y = S · solve_weights(y)` for
    /// the row-major `k × ndof` matrix `S`.
    pub fn compose(&self, s: &[f64], k: usize) -> Vec<f64> {
        let n = self.ndof;
        let m = self.rows.len();
        let mut g = alloc::vec![0.0; k * m];
        for (i, out) in g.chunks_mut(m).enumerate() {
            let si: Vec<f64> = s[i * n..(i + 1) * n].iter().zip(&self.scale).map(|(a, d)| a / d).collect();
            match &self.factor {
                Factor::Cholesky(l) => {
                    let z = cholesky_solve(l, n, &si);
                    for (r, o) in out.iter_mut().enumerate() {
                        let row = &self.design[r * n..(r + 1) * n];
                        *o = (0..n).map(|c| row[c] / self.scale[c] * z[c]).sum();
                    }
                }
                Factor::Qr { qr, tau } => {
                    let z = rt_solve(qr, n, &si);
                    out[..n].copy_from_slice(&z);
                    for c in (0..n).rev() {
                        let mut dot = out[c];
                        for r in c + 1..m {
                            dot += qr[r * n + c] * out[r];
                        }
                        dot *= tau[c];
                        out[c] -= dot;
                        for r in c + 1..m {
                            out[r] -= dot * qr[r * n + c];
                        }
                    }
                }
            }
        }
        g
    }

    /// Explicit normal-equation system for data `y`.
    pub fn system(&self, y: &[f64]) -> CfSystem {
        let n = self.ndof;
        let m = gram(&self.design, n);
        let mut b = alloc::vec![0.0; n];
        for (r, &yr) in y.iter().enumerate() {
            for k in 0..n {
                b[k] += self.design[r * n + k] * yr;
            }
        }
        CfSystem { ndof: n, m, b, c: y.iter().map(|v| v * v).sum() }
    }
}

fn column_norms(a: &[f64], n: usize) -> Vec<f64> {
    let mut s = alloc::vec![0.0; n];
    for row in a.chunks(n) {
        for (acc, x) in s.iter_mut().zip(row) {
            *acc += x * x;
        }
    }
    s.into_iter().map(|v| if v > 0.0 { math::sqrt(v) } else { 1.0 }).collect()
}

fn factor_normal(design: &[f64], ndof: usize, node: usize) -> Result<(Vec<f64>, f64), SolveError> {
    let m = gram(design, ndof);
    let l = cholesky(&m, ndof).ok_or(SolveError::NotPositiveDefinite { node })?;
    let cond = condition_estimate(ndof, |x, y| symv(&m, ndof, x, y), |x| cholesky_solve(&l, ndof, x));
    Ok((l, cond))
}

fn factor_qr(design: &[f64], rows: usize, ndof: usize, node: usize) -> Result<(Factor, f64), SolveError> {
    let (qr, tau) = householder_qr(design, rows, ndof);
    if (0..ndof).any(|k| qr[k * ndof + k] == 0.0) {
        return Err(SolveError::NotPositiveDefinite { node });
    }
    let cond = condition_estimate(
        ndof,
        |x, y| {
            let mut z = alloc::vec![0.0; ndof];
            r_mul(&qr, ndof, x, &mut z);
            rt_mul(&qr, ndof, &z, y);
        },
        |x| {
            let z = rt_solve(&qr, ndof, x);
            r_solve(&qr, ndof, &z)
        },
    );
    Ok((Factor::Qr { qr, tau }, cond))
}

/// Assembles the normal equations of `region` for the slab starting at `t0`.
pub fn assemble(region: &Region, problem: &ProblemSpec, params: &CfParams, t0: f64) -> Result<CfSystem, SolveError> {
    let curve = problem.curve.as_ref().ok_or(SolveError::EmptyInterface { node: region.node })?;
    if region.segments.is_empty() {
        return Err(SolveError::EmptyInterface { node: region.node });
    }
    let ndof = dof_count(region.bbox.dim);
    let rows = build_rows(region, curve, params);
    let mut design = alloc::vec![0.0; rows.len() * ndof];
    for (r, row) in rows.iter().enumerate() {
        row_functional(region, row, problem.c, &mut design[r * ndof..(r + 1) * ndof]);
    }
    let y = rows_rhs(&rows, problem, t0, region.bbox.dt);
    let m = gram(&design, ndof);
    let mut b = alloc::vec![0.0; ndof];
    for (r, &yr) in y.iter().enumerate() {
        for k in 0..ndof {
            b[k] += design[r * ndof + k] * yr;
        }
    }
    Ok(CfSystem { ndof, m, b, c: y.iter().map(|v| v * v).sum() })
}

/// Solves `M w = b` by Cholesky, rejecting systems above `params.cond_limit`.
pub fn solve(system: &CfSystem, params: &CfParams, node: usize) -> Result<Vec<f64>, SolveError> {
    let n = system.ndof;
    let l = cholesky(&system.m, n).ok_or(SolveError::NotPositiveDefinite { node })?;
    let cond = condition_estimate(n, |x, y| symv(&system.m, n, x, y), |x| cholesky_solve(&l, n, x));
    if !(cond <= params.cond_limit) {
        return Err(SolveError::IllConditioned { node, cond });
    }
    Ok(cholesky_solve(&l, n, &system.b))
}

fn gram(a: &[f64], n: usize) -> Vec<f64> {
    let rows = a.len() / n;
    let mut m = alloc::vec![0.0; n * n];
    for r in 0..rows {
        let row = &a[r * n..(r + 1) * n];
        for i in 0..n {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..n {
                m[i * n + j] += ri * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            m[i * n + j] = m[j * n + i];
        }
    }
    m
}

fn symv(m: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    for i in 0..n {
        y[i] = m[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

pub(crate) fn cholesky(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = alloc::vec![0.0; n * n];
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = math::sqrt(d);
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[k * n + i] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    z
}

/// In-place Householder QR of a row-major `m × n` matrix (m ≥ n).
fn householder_qr(a: &[f64], m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut qr = a.to_vec();
    let mut tau = alloc::vec![0.0; n];
    for k in 0..n {
        let mut norm2 = 0.0;
        for i in k..m {
            norm2 += qr[i * n + k] * qr[i * n + k];
        }
        let norm = math::sqrt(norm2);
        if norm == 0.0 {
            continue;
        }
        let akk = qr[k * n + k];
        let alpha = if akk >= 0.0 { -norm } else { norm };
        let v0 = akk - alpha;
        // v = (1, x_{k+1}/v0, …); H = I − τ v vᵀ with τ = −v0/alpha.
        for i in k + 1..m {
            qr[i * n + k] /= v0;
        }
        tau[k] = -v0 / alpha;
        qr[k * n + k] = alpha;
        for j in k + 1..n {
            let mut s = qr[k * n + j];
            for i in k + 1..m {
                s += qr[i * n + k] * qr[i * n + j];
            }
            s *= tau[k];
            qr[k * n + j] -= s;
            for i in k + 1..m {
                qr[i * n + j] -= s * qr[i * n + k];
            }
        }
    }
    (qr, tau)
}

fn r_mul(qr: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    for i in 0..n {
        y[i] = (i..n).map(|j| qr[i * n + j] * x[j]).sum();
    }
}

fn rt_mul(qr: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    for j in 0..n {
        y[j] = (0..=j).map(|i| qr[i * n + j] * x[i]).sum();
    }
}

fn r_solve(qr: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= qr[i * n + j] * x[j];
        }
        x[i] = s / qr[i * n + i];
    }
    x
}

fn rt_solve(qr: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for j in 0..n {
        let mut s = x[j];
        for i in 0..j {
            s -= qr[i * n + j] * x[i];
        }
        x[j] = s / qr[j * n + j];
    }
    x
}

/// `λ_max / λ_min` of an SPD operator by power and inverse iteration.
fn condition_estimate<F, S>(n: usize, apply: F, solve: S) -> f64
where
    F: Fn(&[f64], &mut [f64]),
    S: Fn(&[f64]) -> Vec<f64>,
{
    let start: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * math::sin(1.0 + i as f64)).collect();
    let normalize = |v: &mut [f64]| {
        let s = math::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if s > 0.0 {
            for x in v.iter_mut() {
                *x /= s;
            }
        }
        s
    };
    let mut x = start.clone();
    normalize(&mut x);
    let mut y = alloc::vec![0.0; n];
    let mut lmax = 0.0;
    for _ in 0..60 {
        apply(&x, &mut y);
        lmax = normalize(&mut y);
        core::mem::swap(&mut x, &mut y);
    }
    let mut x = start;
    normalize(&mut x);
    let mut inv = 0.0;
    for _ in 0..60 {
        let mut z = solve(&x);
        inv = normalize(&mut z);
        x = z;
    }
    if !(inv > 0.0) || !inv.is_finite() {
        return f64::INFINITY;
    }
    lmax * inv
}
