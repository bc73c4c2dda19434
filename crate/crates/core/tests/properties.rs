//! Property suites: stencil exactness, Hermite basis, normal-matrix structure,
//! exact recovery of representable correction functions and the jump data of
//! every manufactured problem.

use cfm_core::cfsolve::{CfParams, RegionOperator, RowKind, SolveMethod};
use cfm_core::geometry::{InterfaceCurve, Side, Vec2};
use cfm_core::grid::{classify_nodes, Grid};
use cfm_core::interp::{basis_local, dof_count, dof_layout, LocalBox, SpaceTimeInterpolant, DOF_2D};
use cfm_core::problems::{problem_em_shielding, ProblemId, ProblemSpec};
use cfm_core::regions::{build_tiling, Region, DEFAULT_L_FACTOR};
use cfm_core::stencil::laplacian_at;
use cfm_core::Serial;
use proptest::prelude::*;

fn all_problems() -> Vec<ProblemSpec> {
    let mut v: Vec<ProblemSpec> = ProblemId::ALL.iter().map(|&id| ProblemSpec::by_id(id)).collect();
    v.push(problem_em_shielding(1.0));
    v
}

// ---------------------------------------------------------------- stencil

fn poly1(c: &[f64], x: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d2 = 0.0;
    for (k, &a) in c.iter().enumerate() {
        v += a * x.powi(k as i32);
        if k >= 2 {
            d2 += a * (k * (k - 1)) as f64 * x.powi(k as i32 - 2);
        }
    }
    (v, d2)
}

proptest! {
    #[test]
    fn stencil_exact_for_quintics_1d(c in proptest::collection::vec(-1.0f64..1.0, 6), node in 3usize..37) {
        let g = Grid::line(0.0, 1.0, 40).unwrap();
        let u: Vec<f64> = (0..40).map(|i| poly1(&c, g.coords(i).x).0).collect();
        let exact = poly1(&c, g.coords(node).x).1;
        let got = laplacian_at(&u, node, &g);
        prop_assert!((got - exact).abs() < 1e-8 * (1.0 + exact.abs()), "{got} vs {exact}");
    }

    #[test]
    fn stencil_exact_for_quintics_2d(cx in proptest::collection::vec(-1.0f64..1.0, 6), cy in proptest::collection::vec(-1.0f64..1.0, 6), mixed in -1.0f64..1.0, i in 3usize..27, j in 3usize..27) {
        // Sum of per-axis quintics plus x²y³ (total degree 5).
        let g = Grid::square(0.0, 1.0, 30).unwrap();
        let f = |p: Vec2| poly1(&cx, p.x).0 + poly1(&cy, p.y).0 + mixed * p.x * p.x * p.y.powi(3);
        let u: Vec<f64> = (0..g.node_count()).map(|k| f(g.coords(k))).collect();
        let p = g.coords(g.index(i, j));
        let exact = poly1(&cx, p.x).1 + poly1(&cy, p.y).1 + mixed * (2.0 * p.y.powi(3) + 6.0 * p.x * p.x * p.y);
        let got = laplacian_at(&u, g.index(i, j), &g);
        prop_assert!((got - exact).abs() < 1e-8 * (1.0 + exact.abs()), "{got} vs {exact}");
    }
}

// ---------------------------------------------------------------- Hermite basis

#[test]
fn hermite_cardinality() {
    for dim in [1, 2] {
        let n = dof_count(dim);
        let layout = dof_layout(dim);
        assert_eq!(layout.len(), n);
        let mut out = vec![0.0; n];
        for (j, &(corner, orders)) in layout.iter().enumerate() {
            basis_local(dim, corner, orders, &mut out);
            for (i, &v) in out.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-14, "dim {dim}: basis {i} at dof {j} = {v}");
            }
        }
    }
}

fn tilted_box() -> LocalBox {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let a0 = Vec2::new(0.8, 0.6);
    LocalBox { dim: 2, origin: Vec2::new(0.2, 0.1), axes: [a0, a0.perp()], side: 0.05 * s * 8.0, t0: 0.3, dt: 0.02, margin: [0.0, 0.0] }
}

proptest! {
    #[test]
    fn hermite_derivatives_match_finite_differences(w in proptest::collection::vec(-1.0f64..1.0, DOF_2D), xi in 0.2f64..0.8, eta in 0.2f64..0.8, tau in 0.2f64..0.8) {
        let bbox = tilted_box();
        let f = SpaceTimeInterpolant::new(bbox, w);
        let (p, t) = bbox.to_physical([xi, eta, tau]);
        let hx = 1e-4 * bbox.side;
        let ht = 1e-4 * bbox.dt;
        let ev = |q: Vec2, s: f64| f.eval(q, s).unwrap();
        let cd = |a: f64, b: f64, h: f64| (a - b) / (2.0 * h);
        let checks = [
            ([1, 0, 0], cd(ev(p + Vec2::new(hx, 0.0), t), ev(p - Vec2::new(hx, 0.0), t), hx)),
            ([0, 1, 0], cd(ev(p + Vec2::new(0.0, hx), t), ev(p - Vec2::new(0.0, hx), t), hx)),
            ([0, 0, 1], cd(ev(p, t + ht), ev(p, t - ht), ht)),
            ([2, 0, 0], (ev(p + Vec2::new(hx, 0.0), t) - 2.0 * ev(p, t) + ev(p - Vec2::new(hx, 0.0), t)) / (hx * hx)),
            ([0, 0, 2], (ev(p, t + ht) - 2.0 * ev(p, t) + ev(p, t - ht)) / (ht * ht)),
        ];
        for (m, fd) in checks {
            let exact = f.partial(m, p, t).unwrap();
            let scale = exact.abs().max(1.0 / bbox.side.powi((m[0] + m[1]) as i32) / bbox.dt.powi(m[2] as i32));
            prop_assert!((exact - fd).abs() <= 1e-6 * scale, "{m:?}: {exact} vs {fd}");
        }
    }
}

// ---------------------------------------------------------------- normal matrix

fn tilings(problem: &ProblemSpec, ns: &[usize]) -> Vec<(usize, Vec<Region>)> {
    let curve = problem.curve.as_ref().unwrap();
    ns.iter()
        .map(|&n| {
            let g = Grid::new(problem.dim, [problem.lower; 2], [problem.upper; 2], n).unwrap();
            let dt = problem.default_gamma * g.dx();
            let sides = classify_nodes(&g, curve);
            (n, build_tiling(&sides, curve, &g, DEFAULT_L_FACTOR, dt, &Serial).unwrap().regions)
        })
        .collect()
}

#[test]
fn normal_matrix_symmetric_psd_on_every_region() {
    let mut total = 0;
    for problem in all_problems() {
        let ns: &[usize] = if problem.dim == 1 { &[50, 100, 200, 400] } else { &[50, 100, 200] };
        let curve = problem.curve.as_ref().unwrap();
        for (n, regions) in tilings(&problem, ns) {
            for region in &regions {
                let op = RegionOperator::build(region, curve, problem.c, &CfParams::default()).unwrap();
                let sys = op.system(&op.rhs(&problem, 0.1));
                let k = sys.ndof;
                let diag_max = (0..k).map(|i| sys.m[i * k + i]).fold(0.0, f64::max);
                for i in 0..k {
                    assert!(sys.m[i * k + i] >= 0.0);
                    for j in 0..i {
                        assert_eq!(sys.m[i * k + j], sys.m[j * k + i], "{} N={n} node {}", problem.id, region.node);
                    }
                }
                // Quadratic form at a spread of probe vectors.
                for s in 0..8 {
                    let x: Vec<f64> = (0..k).map(|i| ((i * 7 + s * 13) as f64).sin()).collect();
                    let q: f64 = (0..k).map(|i| x[i] * (0..k).map(|j| sys.m[i * k + j] * x[j]).sum::<f64>()).sum();
                    let xx: f64 = x.iter().map(|v| v * v).sum();
                    assert!(q >= -1e-12 * diag_max * xx, "{} N={n} node {}: xᵀMx = {q}", problem.id, region.node);
                }
                total += 1;
            }
        }
    }
    assert!(total > 1000);
}

// ---------------------------------------------------------------- polynomial recovery

/// Polynomial in the region's unit-box coordinates, per-dimension degree ≤ 3.
struct LocalPoly {
    /// `coef[a][b][c]` multiplies `ξᵃ ηᵇ τᶜ`.
    coef: [[[f64; 4]; 4]; 4],
    dim: usize,
}

impl LocalPoly {
    fn deriv(&self, l: [f64; 3], m: [usize; 3]) -> f64 {
        let falling = |p: usize, k: usize| (0..k).map(|i| (p - i) as f64).product::<f64>();
        let mut s = 0.0;
        for a in m[0]..4 {
            for b in m[1]..4 {
                for c in m[2]..4 {
                    let v = self.coef[a][b][c];
                    if v == 0.0 || (self.dim == 1 && b > 0) {
                        continue;
                    }
                    s += v
                        * falling(a, m[0])
                        * falling(b, m[1])
                        * falling(c, m[2])
                        * l[0].powi((a - m[0]) as i32)
                        * l[1].powi((b - m[1]) as i32)
                        * l[2].powi((c - m[2]) as i32);
                }
            }
        }
        s
    }
}

fn recovery_error(region: &Region, curve: &InterfaceCurve, c: f64, poly: &LocalPoly, method: SolveMethod) -> f64 {
    let params = CfParams { method, ..CfParams::default() };
    let op = RegionOperator::build(region, curve, c, &params).unwrap();
    let b = region.bbox;
    let y: Vec<f64> = op
        .rows
        .iter()
        .map(|r| {
            let t = b.t0 + r.tau * b.dt;
            let l = b.to_local(r.point, t);
            let data = match r.kind {
                RowKind::Volume => {
                    let lap = (poly.deriv(l, [2, 0, 0]) + poly.deriv(l, [0, 2, 0])) / (b.side * b.side);
                    lap - poly.deriv(l, [0, 0, 2]) / (b.dt * b.dt * c * c)
                }
                RowKind::Dirichlet => poly.deriv(l, [0, 0, 0]),
                RowKind::Neumann { normal } => {
                    let grad = (poly.deriv(l, [1, 0, 0]) / b.side) * b.axes[0] + (poly.deriv(l, [0, 1, 0]) / b.side) * b.axes[1];
                    grad.dot(normal)
                }
            };
            r.scale * data
        })
        .collect();
    let w = op.solve_weights(&y);
    let exact = SpaceTimeInterpolant::encode(b, |corner, m| poly.deriv(corner, m)).weights;
    let scale = exact.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    w.iter().zip(&exact).fold(0.0f64, |a, (x, e)| a.max((x - e).abs())) / scale
}

#[test]
fn recovers_product_polynomial() {
    // D* = (ξ − ½)(τ − ¼)² in local coordinates.
    let mut coef = [[[0.0; 4]; 4]; 4];
    for (a, ca) in [(0usize, -0.5), (1, 1.0)] {
        for (c, cc) in [(0usize, 1.0 / 16.0), (1, -0.5), (2, 1.0)] {
            coef[a][0][c] += ca * cc;
        }
    }
    for problem in [ProblemSpec::by_id(ProblemId::Line1d), ProblemSpec::by_id(ProblemId::Circle)] {
        let poly = LocalPoly { coef, dim: problem.dim };
        let curve = problem.curve.as_ref().unwrap();
        for (_, regions) in tilings(&problem, &[50]) {
            for region in regions.iter().take(12) {
                for method in [SolveMethod::NormalEquations, SolveMethod::Qr] {
                    let e = recovery_error(region, curve, problem.c, &poly, method);
                    assert!(e < 1e-10, "{} node {} {method:?}: {e:e}", problem.id, region.node);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn recovers_random_tricubic(seed in proptest::collection::vec(-1.0f64..1.0, 64), which in 0usize..5, pick in 0usize..1000) {
        let problem = all_problems().into_iter().nth(which).unwrap();
        let mut coef = [[[0.0; 4]; 4]; 4];
        for (k, v) in seed.iter().enumerate() {
            coef[k / 16][(k / 4) % 4][k % 4] = *v;
        }
        let poly = LocalPoly { coef, dim: problem.dim };
        let curve = problem.curve.as_ref().unwrap();
        let (_, regions) = tilings(&problem, &[50]).pop().unwrap();
        let region = &regions[pick % regions.len()];
        let e = recovery_error(region, curve, problem.c, &poly, SolveMethod::NormalEquations);
        prop_assert!(e < 1e-10, "{} node {}: {e:e}", problem.id, region.node);
    }
}

// ---------------------------------------------------------------- jump and forcing data

fn fd1(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    (g(-2.0 * h) - 8.0 * g(-h) + 8.0 * g(h) - g(2.0 * h)) / (12.0 * h)
}

fn fd2(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    (-g(-2.0 * h) + 16.0 * g(-h) - 30.0 * g(0.0) + 16.0 * g(h) - g(2.0 * h)) / (12.0 * h * h)
}

#[test]
fn jump_and_forcing_data_consistent_for_every_problem() {
    for problem in all_problems() {
        let curve = problem.curve.clone().unwrap();
        let (lo, hi) = curve.param_range();
        let period = problem.period;
        let ht = 1e-3 * period;
        let hx = 1e-3 * (problem.upper - problem.lower);
        let samples = if problem.dim == 1 { vec![0.0, 1.0] } else { (0..23).map(|k| lo + (hi - lo) * (k as f64 + 0.37) / 23.0).collect() };
        for &theta in &samples {
            let q = curve.position(theta);
            let normal = curve.one_sided_frame(theta).normal;
            // Side labels agree with the normal direction.
            // Away from cusps, where a fixed offset can reach the neighbouring arc.
            if curve.corner_parameters().iter().all(|&c| (c - theta).abs() > 0.02 && (c - theta).abs() < hi - lo - 0.02) {
                let off = 1e-4 * (problem.upper - problem.lower);
                assert_eq!(curve.side_of(q + off * normal), Side::Plus, "{} θ={theta}", problem.id);
                assert_eq!(curve.side_of(q - off * normal), Side::Minus, "{} θ={theta}", problem.id);
            }
            for frac in [0.0, 0.23, 0.61] {
                let t = frac * period;
                let up = |p: Vec2, s: f64| problem.u(Side::Plus, p, s);
                let um = |p: Vec2, s: f64| problem.u(Side::Minus, p, s);
                let d = |p: Vec2, s: f64| up(p, s) - um(p, s);
                let scale = 1.0 + up(q, t).abs() + um(q, t).abs();

                assert!((problem.alpha(q, t) - d(q, t)).abs() < 1e-14 * scale);

                let dn = fd1(|s| d(q + s * normal, t), hx);
                let beta = problem.beta(q, normal, t);
                assert!((beta - dn).abs() < 1e-6 * (scale + beta.abs()), "{} β: {beta} vs {dn}", problem.id);

                for k in 1..=3u32 {
                    let exact = problem.correction_time_derivative(q, t, k);
                    let fd = match k {
                        1 => fd1(|s| d(q, t + s), ht),
                        2 => fd2(|s| d(q, t + s), ht),
                        _ => fd1(|s| problem.correction_time_derivative(q, t + s, 2), ht),
                    };
                    let tol = 1e-5 * (exact.abs() + scale * (std::f64::consts::TAU / period).powi(k as i32));
                    assert!((exact - fd).abs() < tol, "{} ∂t^{k}D: {exact} vs {fd}", problem.id);
                }

                for (side, u) in [(Side::Plus, &up as &dyn Fn(Vec2, f64) -> f64), (Side::Minus, &um)] {
                    let lap = fd2(|s| u(q + Vec2::new(s, 0.0), t), hx)
                        + if problem.dim == 2 { fd2(|s| u(q + Vec2::new(0.0, s), t), hx) } else { 0.0 };
                    let utt = fd2(|s| u(q, t + s), ht);
                    let oracle = lap - utt / (problem.c * problem.c);
                    let f = problem.forcing(side, q, t);
                    let mag = lap.abs() + (utt / (problem.c * problem.c)).abs() + 1.0;
                    assert!((f - oracle).abs() < 1e-5 * mag, "{} f{side:?}: {f} vs {oracle}", problem.id);
                }
                let fd_diff = problem.forcing(Side::Plus, q, t) - problem.forcing(Side::Minus, q, t);
                assert!((problem.forcing_difference(q, t) - fd_diff).abs() <= 1e-12 * (1.0 + fd_diff.abs()));
            }
        }
        let cont = problem.continuous();
        assert!(cont.curve.is_none());
        let q = Vec2::new(0.5 * (problem.lower + problem.upper), 0.1);
        assert_eq!(cont.alpha(q, 0.2 * period), 0.0);
    }
}
