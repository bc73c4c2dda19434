//! Tensor-product cubic Hermite interpolant in space-time.
//!
//! A region is mapped affinely onto the unit box `(ξ, η, τ) ∈ [0,1]³` (or
//! `(ξ, τ)` in 1D). The degrees of freedom are, per corner, the value and all
//! mixed first derivatives with respect to the unit-box coordinates:
//! `(1, ∂ξ, ∂η, ∂τ, ∂ξη, ∂ξτ, ∂ητ, ∂ξητ)` in 2D and `(1, ∂ξ, ∂τ, ∂ξτ)` in 1D.
//! Corners are ordered lexicographically with ξ as the most significant bit.

use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::Vec2;

pub const DOF_1D: usize = 16;
pub const DOF_2D: usize = 64;

const SLOTS_1D: [[usize; 2]; 4] = [[0, 0], [1, 0], [0, 1], [1, 1]];
const SLOTS_2D: [[usize; 3]; 8] = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]];

pub fn dof_count(dim: usize) -> usize {
    if dim == 1 {
        DOF_1D
    } else {
        DOF_2D
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum InterpError {
    #[error("point ({xi:.3}, {eta:.3}, {tau:.3}) lies outside the interpolation box")]
    OutOfBox { xi: f64, eta: f64, tau: f64 },
    #[error("derivative order {0} exceeds the cubic basis")]
    UnsupportedOrder(usize),
}

/// Cubic Hermite basis on [0,1], ordered `[h00, h10, h01, h11]`
/// (value at 0, slope at 0, value at 1, slope at 1), differentiated `k` times.
pub fn hermite_1d(s: f64, k: usize) -> [f64; 4] {
    match k {
        0 => {
            let s2 = s * s;
            let s3 = s2 * s;
            [2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2]
        }
        1 => {
            let s2 = s * s;
            [6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s]
        }
        2 => [12.0 * s - 6.0, 6.0 * s - 4.0, -12.0 * s + 6.0, 6.0 * s - 2.0],
        3 => [12.0, 6.0, -12.0, 6.0],
        _ => [0.0; 4],
    }
}

/// Affine map from a region (rotated square × time slab) to the unit box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBox {
    pub dim: usize,
    /// Physical position of the `ξ = η = 0` corner.
    pub origin: Vec2,
    /// Unit edge directions (orthonormal). Only `axes[0]` is used in 1D.
    pub axes: [Vec2; 2],
    /// Edge length L.
    pub side: f64,
    pub t0: f64,
    pub dt: f64,
    /// Allowed extrapolation in unit-box coordinates `[space, time]`.
    pub margin: [f64; 2],
}

impl LocalBox {
    pub fn to_local(&self, p: Vec2, t: f64) -> [f64; 3] {
        let d = p - self.origin;
        let xi = d.dot(self.axes[0]) / self.side;
        let eta = if self.dim == 2 { d.dot(self.axes[1]) / self.side } else { 0.0 };
        [xi, eta, (t - self.t0) / self.dt]
    }

    pub fn to_physical(&self, local: [f64; 3]) -> (Vec2, f64) {
        let mut p = self.origin + (local[0] * self.side) * self.axes[0];
        if self.dim == 2 {
            p += (local[1] * self.side) * self.axes[1];
        }
        (p, self.t0 + local[2] * self.dt)
    }

    fn check(&self, local: [f64; 3]) -> Result<bool, InterpError> {
        let inside = |v: f64, m: f64| v >= -m - 1e-9 && v <= 1.0 + m + 1e-9;
        let strict = |v: f64| (-1e-9..=1.0 + 1e-9).contains(&v);
        let spatial = if self.dim == 2 { [local[0], local[1]] } else { [local[0], 0.5] };
        let ok = spatial.iter().all(|&v| inside(v, self.margin[0])) && inside(local[2], self.margin[1]);
        if !ok {
            return Err(InterpError::OutOfBox { xi: local[0], eta: local[1], tau: local[2] });
        }
        Ok(!(spatial.iter().all(|&v| strict(v)) && strict(local[2])))
    }
}

/// Basis values of every DOF for unit-box derivative orders `orders`
/// (`[ξ, η, τ]`; the η entry must be 0 in 1D). Writes `dof_count(dim)` values.
pub fn basis_local(dim: usize, local: [f64; 3], orders: [usize; 3], out: &mut [f64]) {
    let hx = hermite_1d(local[0], orders[0]);
    let ht = hermite_1d(local[2], orders[2]);
    if dim == 1 {
        if orders[1] != 0 {
            out[..DOF_1D].fill(0.0);
            return;
        }
        for a in 0..2 {
            for c in 0..2 {
                let corner = a * 2 + c;
                for (slot, [dx, dt]) in SLOTS_1D.iter().enumerate() {
                    out[corner * 4 + slot] = hx[a * 2 + dx] * ht[c * 2 + dt];
                }
            }
        }
    } else {
        let hy = hermite_1d(local[1], orders[1]);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let corner = a * 4 + b * 2 + c;
                    for (slot, [dx, dy, dt]) in SLOTS_2D.iter().enumerate() {
                        out[corner * 8 + slot] = hx[a * 2 + dx] * hy[b * 2 + dy] * ht[c * 2 + dt];
                    }
                }
            }
        }
    }
}

/// Unit-box corner and derivative slot of each DOF.
pub fn dof_layout(dim: usize) -> Vec<([f64; 3], [usize; 3])> {
    let mut out = Vec::with_capacity(dof_count(dim));
    if dim == 1 {
        for a in 0..2 {
            for c in 0..2 {
                for [dx, dt] in SLOTS_1D {
                    out.push(([a as f64, 0.0, c as f64], [dx, 0, dt]));
                }
            }
        }
    } else {
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for [dx, dy, dt] in SLOTS_2D {
                        out.push(([a as f64, b as f64, c as f64], [dx, dy, dt]));
                    }
                }
            }
        }
    }
    out
}

/// Expands `∂xᵐˣ ∂yᵐʸ` into unit-box terms `(coef, ξ-order, η-order)`.
fn spatial_expansion(bbox: &LocalBox, mx: usize, my: usize) -> Vec<(f64, usize, usize)> {
    // ∂x = (e₁ₓ/L)∂ξ + (e₂ₓ/L)∂η and likewise for ∂y.
    let (ax, bx) = (bbox.axes[0].x / bbox.side, if bbox.dim == 2 { bbox.axes[1].x / bbox.side } else { 0.0 });
    let (ay, by) = (bbox.axes[0].y / bbox.side, if bbox.dim == 2 { bbox.axes[1].y / bbox.side } else { 0.0 });
    let order = mx + my;
    // poly[i] = coefficient of ∂ξ^i ∂η^(n−i) after n factors.
    let mut poly = alloc::vec![1.0];
    for f in 0..order {
        let (a, b) = if f < mx { (ax, bx) } else { (ay, by) };
        let mut next = alloc::vec![0.0; poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i + 1] += c * a;
            next[i] += c * b;
        }
        poly = next;
    }
    poly.into_iter()
        .enumerate()
        .filter(|(_, c)| *c != 0.0)
        .map(|(i, c)| (c, i, order - i))
        .collect()
}

/// Correction-function representation on one region.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeInterpolant {
    pub bbox: LocalBox,
    pub weights: Vec<f64>,
}

impl SpaceTimeInterpolant {
    pub fn new(bbox: LocalBox, weights: Vec<f64>) -> Self {
        debug_assert_eq!(weights.len(), dof_count(bbox.dim));
        SpaceTimeInterpolant { bbox, weights }
    }

    /// Interpolant whose DOFs are taken from `f(local point, unit-box orders)`.
    pub fn encode<F: Fn([f64; 3], [usize; 3]) -> f64>(bbox: LocalBox, f: F) -> Self {
        let weights = dof_layout(bbox.dim).into_iter().map(|(corner, slot)| f(corner, slot)).collect();
        SpaceTimeInterpolant { bbox, weights }
    }

    fn combine(&self, local: [f64; 3], orders: [usize; 3]) -> f64 {
        let mut basis = [0.0; DOF_2D];
        let n = dof_count(self.bbox.dim);
        basis_local(self.bbox.dim, local, orders, &mut basis[..n]);
        basis[..n].iter().zip(&self.weights).map(|(b, w)| b * w).sum()
    }

    /// True when `(p, t)` is inside the extrapolation margin but not the box.
    pub fn is_extrapolated(&self, p: Vec2, t: f64) -> Result<bool, InterpError> {
        self.bbox.check(self.bbox.to_local(p, t))
    }

    pub fn eval(&self, p: Vec2, t: f64) -> Result<f64, InterpError> {
        let local = self.bbox.to_local(p, t);
        self.bbox.check(local)?;
        Ok(self.combine(local, [0, 0, 0]))
    }

    /// Physical partial derivative `∂xᵐ⁰ ∂yᵐ¹ ∂tᵐ²`.
    pub fn partial(&self, m: [usize; 3], p: Vec2, t: f64) -> Result<f64, InterpError> {
        if let Some(&bad) = m.iter().find(|&&k| k > 3) {
            return Err(InterpError::UnsupportedOrder(bad));
        }
        let local = self.bbox.to_local(p, t);
        self.bbox.check(local)?;
        let time_scale = crate::math::powi(1.0 / self.bbox.dt, m[2] as u32);
        let mut acc = 0.0;
        for (coef, i, j) in spatial_expansion(&self.bbox, m[0], m[1]) {
            if i > 3 || j > 3 || (self.bbox.dim == 1 && j > 0) {
                continue;
            }
            acc += coef * self.combine(local, [i, j, m[2]]);
        }
        Ok(acc * time_scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_box(dim: usize) -> LocalBox {
        LocalBox { dim, origin: Vec2::ZERO, axes: [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)], side: 1.0, t0: 0.0, dt: 1.0, margin: [0.0, 0.0] }
    }

    fn rotated_box() -> LocalBox {
        // Circle region at the east point: diagonals along (1,0) and (0,1).
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let axes = [Vec2::new(s, s), Vec2::new(-s, s)];
        let side = 0.05;
        let center = Vec2::new(0.75, 0.5);
        let origin = center - (0.5 * side) * axes[0] - (0.5 * side) * axes[1];
        LocalBox { dim: 2, origin, axes, side, t0: 0.3, dt: 0.01, margin: [0.0, 0.0] }
    }

    #[test]
    fn cardinality() {
        for dim in [1, 2] {
            let n = dof_count(dim);
            let layout = dof_layout(dim);
            let mut basis = alloc::vec![0.0; n];
            for (k, (corner, _)) in layout.iter().enumerate() {
                for (j, (_, slot)) in layout.iter().enumerate() {
                    basis_local(dim, *corner, *slot, &mut basis);
                    // DOF j's functional applied to basis i: δ when corners match.
                    for i in 0..n {
                        let expected = if layout[i].0 == *corner && layout[i].1 == *slot { 1.0 } else { 0.0 };
                        if layout[j].0 == *corner {
                            assert!((basis[i] - expected).abs() < 1e-14, "dim {dim} dof {i} at corner {k} slot {slot:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn corner_value_basis_has_zero_time_derivative_there() {
        let b = unit_box(2);
        let mut w = alloc::vec![0.0; DOF_2D];
        w[0] = 1.0;
        let f = SpaceTimeInterpolant::new(b, w);
        assert_eq!(f.eval(Vec2::ZERO, 0.0).unwrap(), 1.0);
        assert_eq!(f.eval(Vec2::new(1.0, 0.0), 0.0).unwrap(), 0.0);
        assert_eq!(f.partial([0, 0, 1], Vec2::ZERO, 0.0).unwrap(), 0.0);
    }

    fn encode_physical<F: Fn(Vec2, f64, [usize; 3]) -> f64>(b: LocalBox, f: F) -> SpaceTimeInterpolant {
        // Unit-box derivatives via the chain rule, valid for at most first order per axis.
        SpaceTimeInterpolant::encode(b, |corner, slot| {
            let (p, t) = b.to_physical(corner);
            let mut acc = 0.0;
            let dirs_xi: &[(f64, usize)] = &[(b.axes[0].x, 0), (b.axes[0].y, 1)];
            let dirs_eta: &[(f64, usize)] = &[(b.axes[1].x, 0), (b.axes[1].y, 1)];
            let xi_terms: &[(f64, usize)] = if slot[0] == 1 { dirs_xi } else { &[(1.0, 9)] };
            let eta_terms: &[(f64, usize)] = if slot[1] == 1 { dirs_eta } else { &[(1.0, 9)] };
            for &(cx, ax) in xi_terms {
                for &(cy, ay) in eta_terms {
                    let mut m = [0, 0, slot[2]];
                    if ax < 2 {
                        m[ax] += 1;
                    }
                    if ay < 2 {
                        m[ay] += 1;
                    }
                    acc += cx * cy * f(p, t, m);
                }
            }
            let scale = libm::pow(b.side, (slot[0] + slot[1]) as f64) * libm::pow(b.dt, slot[2] as f64);
            acc * scale
        })
    }

    #[test]
    fn reproduces_linear_function() {
        let b = rotated_box();
        let lin = |p: Vec2, t: f64, m: [usize; 3]| match m {
            [0, 0, 0] => p.x + 2.0 * p.y - t,
            [1, 0, 0] => 1.0,
            [0, 1, 0] => 2.0,
            [0, 0, 1] => -1.0,
            _ => 0.0,
        };
        let f = encode_physical(b, lin);
        for k in 0..50 {
            let local = [(k as f64 * 0.137) % 1.0, (k as f64 * 0.291) % 1.0, (k as f64 * 0.073) % 1.0];
            let (p, t) = b.to_physical(local);
            assert!((f.eval(p, t).unwrap() - lin(p, t, [0, 0, 0])).abs() < 1e-13);
        }
    }

    #[test]
    fn reproduces_cubic_monomial_on_unit_box() {
        let b = unit_box(2);
        let f = SpaceTimeInterpolant::encode(b, |c, slot| {
            // x³t³: ∂x^a ∂t^b at a corner.
            let dx = [c[0].powi(3), 3.0 * c[0] * c[0]][slot[0]];
            let dt = [c[2].powi(3), 3.0 * c[2] * c[2]][slot[2]];
            if slot[1] == 1 {
                0.0
            } else {
                dx * dt
            }
        });
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let (x, y, t) = (next(), next(), next());
            let exact = x.powi(3) * t.powi(3);
            assert!((f.eval(Vec2::new(x, y), t).unwrap() - exact).abs() < 1e-14);
        }
        // ∂xx of x³t³ at (0.5, ·, 1) is 6·0.5 = 3; compare to central differences too.
        let p = Vec2::new(0.5, 0.3);
        let analytic = f.partial([2, 0, 0], p, 1.0).unwrap();
        assert!((analytic - 3.0).abs() < 1e-12);
        let h = 1e-5;
        let fd = (f.eval(Vec2::new(0.5 + h, 0.3), 1.0).unwrap() - 2.0 * f.eval(p, 1.0).unwrap() + f.eval(Vec2::new(0.5 - h, 0.3), 1.0).unwrap()) / (h * h);
        assert!((fd - analytic).abs() < 1e-6 * analytic.abs().max(1.0) * 10.0);
        // Third time derivative of a cubic in t is constant.
        let a = f.partial([0, 0, 3], p, 0.1).unwrap();
        let c = f.partial([0, 0, 3], p, 0.9).unwrap();
        assert!((a - c).abs() < 1e-12);
        assert!(matches!(f.partial([4, 0, 0], p, 0.5), Err(InterpError::UnsupportedOrder(4))));
    }

    #[test]
    fn out_of_box_is_rejected_beyond_margin() {
        let mut b = unit_box(2);
        b.margin = [0.1, 0.1];
        let f = SpaceTimeInterpolant::new(b, alloc::vec![1.0; DOF_2D]);
        assert!(f.eval(Vec2::new(1.05, 0.5), 0.5).is_ok());
        assert!(f.is_extrapolated(Vec2::new(1.05, 0.5), 0.5).unwrap());
        assert!(!f.is_extrapolated(Vec2::new(0.5, 0.5), 0.5).unwrap());
        assert!(matches!(f.eval(Vec2::new(1.2, 0.5), 0.5), Err(InterpError::OutOfBox { .. })));
    }

    #[test]
    fn rotated_frame_matches_pullback() {
        // Quadratic in physical coordinates, encoded on the rotated region.
        let b = rotated_box();
        let g = |p: Vec2, t: f64, m: [usize; 3]| -> f64 {
            let (x, y) = (p.x - 0.75, p.y - 0.5);
            match m {
                [0, 0, 0] => x * y + 3.0 * x * t - y * t,
                [1, 0, 0] => y + 3.0 * t,
                [0, 1, 0] => x - t,
                [0, 0, 1] => 3.0 * x - y,
                [1, 1, 0] => 1.0,
                [1, 0, 1] => 3.0,
                [0, 1, 1] => -1.0,
                _ => 0.0,
            }
        };
        let f = encode_physical(b, g);
        // x·y is not a per-axis bilinear in the rotated frame; it is quadratic in ξ and η.
        let f_check = SpaceTimeInterpolant::encode(b, |c, slot| {
            // Exact unit-box derivatives from a symbolic pull-back via finite differences of high order.
            let h = 1e-3;
            let val = |l: [f64; 3]| {
                let (p, t) = b.to_physical(l);
                g(p, t, [0, 0, 0])
            };
            let d = |l: [f64; 3], axis: usize| {
                let mut a = l;
                let mut m = l;
                a[axis] += h;
                m[axis] -= h;
                (a, m)
            };
            let mut pts: alloc::vec::Vec<([f64; 3], f64)> = alloc::vec![(c, 1.0)];
            for axis in 0..3 {
                if slot[axis] == 1 {
                    pts = pts
                        .into_iter()
                        .flat_map(|(l, w)| {
                            let (a, m) = d(l, axis);
                            [(a, w / (2.0 * h)), (m, -w / (2.0 * h))]
                        })
                        .collect();
                }
            }
            pts.iter().map(|(l, w)| w * val(*l)).sum()
        });
        for k in 0..20 {
            let local = [(k as f64 * 0.37) % 1.0, (k as f64 * 0.61) % 1.0, (k as f64 * 0.11) % 1.0];
            let (p, t) = b.to_physical(local);
            let exact = g(p, t, [0, 0, 0]);
            assert!((f.eval(p, t).unwrap() - exact).abs() < 1e-12);
            assert!((f_check.eval(p, t).unwrap() - exact).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn partials_match_finite_differences(seed in proptest::collection::vec(-1.0f64..1.0, DOF_2D), xi in 0.2f64..0.8, eta in 0.2f64..0.8, tau in 0.2f64..0.8) {
            let b = rotated_box();
            let f = SpaceTimeInterpolant::new(b, seed);
            let (p, t) = b.to_physical([xi, eta, tau]);
            let hx = 1e-5 * b.side;
            let ht = 1e-5 * b.dt;
            let e = |q: Vec2, s: f64| f.eval(q, s).unwrap();
            let checks = [
                (f.partial([1, 0, 0], p, t).unwrap(), (e(Vec2::new(p.x + hx, p.y), t) - e(Vec2::new(p.x - hx, p.y), t)) / (2.0 * hx)),
                (f.partial([0, 1, 0], p, t).unwrap(), (e(Vec2::new(p.x, p.y + hx), t) - e(Vec2::new(p.x, p.y - hx), t)) / (2.0 * hx)),
                (f.partial([0, 0, 1], p, t).unwrap(), (e(p, t + ht) - e(p, t - ht)) / (2.0 * ht)),
            ];
            let scale = f.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
            for (analytic, fd) in checks {
                let mag = analytic.abs().max(scale / b.side);
                prop_assert!((analytic - fd).abs() <= 1e-6 * mag, "analytic {} fd {}", analytic, fd);
            }
            // Second derivatives against differences of first derivatives.
            let dxx = (f.partial([1, 0, 0], Vec2::new(p.x + hx, p.y), t).unwrap() - f.partial([1, 0, 0], Vec2::new(p.x - hx, p.y), t).unwrap()) / (2.0 * hx);
            let axx = f.partial([2, 0, 0], p, t).unwrap();
            prop_assert!((axx - dxx).abs() <= 1e-6 * axx.abs().max(scale / (b.side * b.side)));
            let dtt = (f.partial([0, 0, 2], p, t + ht).unwrap() - f.partial([0, 0, 2], p, t - ht).unwrap()) / (2.0 * ht);
            let attt = f.partial([0, 0, 3], p, t).unwrap();
            prop_assert!((attt - dtt).abs() <= 1e-6 * attt.abs().max(scale / (b.dt * b.dt * b.dt)));
        }
    }
}
