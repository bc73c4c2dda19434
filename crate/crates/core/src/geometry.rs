//! Interface curves and the geometric queries the tiling and quadrature need.
//!
//! Sign convention: the normal points from Ω⁻ into Ω⁺ and jumps are
//! `[q] = q⁺ − q⁻`. Ω⁺ is the unbounded (or, in 1D, alternating right-hand)
//! component.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use thiserror::Error;

use crate::math;

/// Points closer than this to the curve are classified as on it.
pub const ON_CURVE_TOL: f64 = 1e-12;

const GENERIC_SAMPLES: usize = 2048;
const GOLDEN_ITERATIONS: usize = 40;
const CLIP_SAMPLES: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        math::sqrt(self.dot(self))
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise rotation by a quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn from_angle(angle: f64) -> Vec2 {
        Vec2::new(math::cos(angle), math::sin(angle))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self * rhs.x, self * rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Minus,
    On,
    Plus,
}

impl Side {
    pub fn sign(self) -> i8 {
        match self {
            Side::Minus => -1,
            Side::On => 0,
            Side::Plus => 1,
        }
    }

    /// Grid classification: on-curve points belong to Ω⁻.
    pub fn resolved(self) -> Side {
        match self {
            Side::On => Side::Minus,
            s => s,
        }
    }
}

/// Unit normal (Ω⁻ → Ω⁺) and unit tangent at a curve point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub normal: Vec2,
    pub tangent: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub theta: f64,
    pub point: Vec2,
    pub distance: f64,
    /// Another candidate tied within tolerance; the smallest parameter won.
    pub ambiguous: bool,
}

/// A parameter interval of the curve lying inside a footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSegment {
    pub theta_a: f64,
    pub theta_b: f64,
    pub length: f64,
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum GeometryError {
    #[error("curve is not differentiable at parameter {theta}")]
    CornerPoint { theta: f64 },
}

/// Spatial extent of a region: an interval in 1D, a rotated square in 2D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Footprint {
    Interval { lo: f64, hi: f64 },
    Square { center: Vec2, axes: [Vec2; 2], side: f64 },
}

impl Footprint {
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        match *self {
            Footprint::Interval { lo, hi } => p.x >= lo - tol && p.x <= hi + tol,
            Footprint::Square { center, axes, side } => {
                let d = p - center;
                let h = 0.5 * side + tol;
                math::abs(d.dot(axes[0])) <= h && math::abs(d.dot(axes[1])) <= h
            }
        }
    }

    /// Corners in counter-clockwise order of the local axes.
    pub fn vertices(&self) -> Vec<Vec2> {
        match *self {
            Footprint::Interval { lo, hi } => alloc::vec![Vec2::new(lo, 0.0), Vec2::new(hi, 0.0)],
            Footprint::Square { center, axes, side } => {
                let h = 0.5 * side;
                let (a, b) = (h * axes[0], h * axes[1]);
                alloc::vec![center - a - b, center + a - b, center + a + b, center - a + b]
            }
        }
    }

    fn edges(&self) -> Vec<(Vec2, Vec2)> {
        let v = self.vertices();
        if v.len() < 3 {
            return Vec::new();
        }
        (0..v.len()).map(|i| (v[i], v[(i + 1) % v.len()])).collect()
    }
}

/// Star-shaped polar graph `r(θ) = r0 + r1·sin(lobes·θ)` about `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarCurve {
    pub center: Vec2,
    pub r0: f64,
    pub r1: f64,
    pub lobes: u32,
}

impl StarCurve {
    fn radius(&self, theta: f64) -> f64 {
        self.r0 + self.r1 * math::sin(self.lobes as f64 * theta)
    }

    fn position(&self, theta: f64) -> Vec2 {
        self.center + self.radius(theta) * Vec2::from_angle(theta)
    }

    fn derivative(&self, theta: f64) -> Vec2 {
        let k = self.lobes as f64;
        let dr = self.r1 * k * math::cos(k * theta);
        let dir = Vec2::from_angle(theta);
        dr * dir + self.radius(theta) * dir.perp()
    }

    fn side(&self, p: Vec2) -> Side {
        let d = p - self.center;
        let rho = d.norm();
        if rho < ON_CURVE_TOL {
            return Side::Minus;
        }
        let gap = rho - self.radius(math::atan2(d.y, d.x));
        if math::abs(gap) < ON_CURVE_TOL {
            Side::On
        } else if gap > 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

/// Circular arc; the parameter runs from `start` to `start + sweep`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub center: Vec2,
    pub radius: f64,
    pub start: f64,
    pub sweep: f64,
}

impl Arc {
    fn angle(&self, u: f64) -> f64 {
        self.start + u * self.sweep
    }

    fn position(&self, u: f64) -> Vec2 {
        self.center + self.radius * Vec2::from_angle(self.angle(u))
    }

    fn derivative(&self, u: f64) -> Vec2 {
        (self.radius * self.sweep) * Vec2::from_angle(self.angle(u)).perp()
    }

    /// Arc parameter of the radial projection of `p`, unclamped.
    fn project(&self, p: Vec2) -> Option<f64> {
        let d = p - self.center;
        if d.norm() < ON_CURVE_TOL {
            return None;
        }
        Some(wrap_pi(math::atan2(d.y, d.x) - self.start) / self.sweep)
    }
}

/// Curvilinear triangle bounded by three pairwise tangent circles of equal
/// radius. Ω⁻ is the enclosed region; circle interiors belong to Ω⁺. The
/// parameter runs over `[0, 3)`, one unit per arc; integer parameters are the
/// cusps.
#[derive(Debug, Clone, PartialEq)]
pub struct OsculatingCircles {
    pub centers: [Vec2; 3],
    pub radius: f64,
    pub arcs: [Arc; 3],
}

impl OsculatingCircles {
    pub fn new(centers: [Vec2; 3], radius: f64) -> Self {
        let tangency = |i: usize, j: usize| 0.5 * (centers[i] + centers[j]);
        let arc = |i: usize| {
            let from = tangency(i, (i + 2) % 3) - centers[i];
            let to = tangency(i, (i + 1) % 3) - centers[i];
            let start = math::atan2(from.y, from.x);
            let sweep = wrap_pi(math::atan2(to.y, to.x) - start);
            Arc { center: centers[i], radius, start, sweep }
        };
        OsculatingCircles { centers, radius, arcs: [arc(0), arc(1), arc(2)] }
    }

    /// The three cusp points (pairwise tangency points of the circles).
    pub fn cusps(&self) -> [Vec2; 3] {
        [self.arcs[0].position(0.0), self.arcs[1].position(0.0), self.arcs[2].position(0.0)]
    }

    fn split(theta: f64) -> (usize, f64) {
        let t = math::rem_euclid(theta, 3.0);
        let k = (math::floor(t) as usize).min(2);
        (k, t - k as f64)
    }

    fn inside_triangle(&self, p: Vec2) -> bool {
        let [a, b, c] = self.centers;
        let cross = |o: Vec2, u: Vec2, v: Vec2| (u - o).x * (v - o).y - (u - o).y * (v - o).x;
        let area = cross(a, b, c);
        let s = area.signum();
        let tol = ON_CURVE_TOL * math::abs(area);
        s * cross(a, b, p) >= -tol && s * cross(b, c, p) >= -tol && s * cross(c, a, p) >= -tol
    }

    fn side(&self, p: Vec2) -> Side {
        if !self.inside_triangle(p) {
            return Side::Plus;
        }
        let mut on = false;
        for c in &self.centers {
            let gap = p.distance(*c) - self.radius;
            if gap < -ON_CURVE_TOL {
                return Side::Plus;
            }
            if gap <= ON_CURVE_TOL {
                on = true;
            }
        }
        if on {
            Side::On
        } else {
            Side::Minus
        }
    }
}

/// Arbitrary parametric curve given by plain function pointers.
#[derive(Debug, Clone, Copy)]
pub struct GenericCurve {
    pub position: fn(f64) -> Vec2,
    pub derivative: fn(f64) -> Vec2,
    pub side: fn(Vec2) -> Side,
    pub range: (f64, f64),
    pub closed: bool,
}

impl PartialEq for GenericCurve {
    /// Same function addresses and parameter range.
    fn eq(&self, other: &Self) -> bool {
        self.position as usize == other.position as usize
            && self.derivative as usize == other.derivative as usize
            && self.side as usize == other.side as usize
            && self.range == other.range
            && self.closed == other.closed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InterfaceCurve {
    /// Sorted abscissae; sides alternate starting with Ω⁻ on the left.
    Points1D(Vec<f64>),
    Circle { center: Vec2, radius: f64 },
    Star(StarCurve),
    Osculating(OsculatingCircles),
    Generic(GenericCurve),
}

impl InterfaceCurve {
    pub fn points_1d(mut points: Vec<f64>) -> Self {
        points.sort_by(f64::total_cmp);
        InterfaceCurve::Points1D(points)
    }

    pub fn dim(&self) -> usize {
        match self {
            InterfaceCurve::Points1D(_) => 1,
            _ => 2,
        }
    }

    pub fn param_range(&self) -> (f64, f64) {
        match self {
            InterfaceCurve::Points1D(p) => (0.0, p.len().saturating_sub(1) as f64),
            InterfaceCurve::Circle { .. } | InterfaceCurve::Star(_) => (0.0, TAU),
            InterfaceCurve::Osculating(_) => (0.0, 3.0),
            InterfaceCurve::Generic(g) => g.range,
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            InterfaceCurve::Points1D(_) => false,
            InterfaceCurve::Generic(g) => g.closed,
            _ => true,
        }
    }

    /// Parameters at which the curve is only C⁰.
    pub fn corner_parameters(&self) -> Vec<f64> {
        match self {
            InterfaceCurve::Osculating(_) => alloc::vec![0.0, 1.0, 2.0],
            _ => Vec::new(),
        }
    }

    pub fn position(&self, theta: f64) -> Vec2 {
        match self {
            InterfaceCurve::Points1D(p) => {
                let i = (math::floor(theta + 0.5).max(0.0) as usize).min(p.len() - 1);
                Vec2::new(p[i], 0.0)
            }
            InterfaceCurve::Circle { center, radius } => *center + *radius * Vec2::from_angle(theta),
            InterfaceCurve::Star(s) => s.position(theta),
            InterfaceCurve::Osculating(o) => {
                let (k, u) = OsculatingCircles::split(theta);
                o.arcs[k].position(u)
            }
            InterfaceCurve::Generic(g) => (g.position)(theta),
        }
    }

    /// d position / dθ. Zero for isolated 1D points.
    pub fn derivative(&self, theta: f64) -> Vec2 {
        match self {
            InterfaceCurve::Points1D(_) => Vec2::ZERO,
            InterfaceCurve::Circle { radius, .. } => *radius * Vec2::from_angle(theta).perp(),
            InterfaceCurve::Star(s) => s.derivative(theta),
            InterfaceCurve::Osculating(o) => {
                let (k, u) = OsculatingCircles::split(theta);
                o.arcs[k].derivative(u)
            }
            InterfaceCurve::Generic(g) => (g.derivative)(theta),
        }
    }

    pub fn side_of(&self, p: Vec2) -> Side {
        match self {
            InterfaceCurve::Points1D(points) => {
                let mut below = 0usize;
                for &q in points {
                    if math::abs(p.x - q) <= ON_CURVE_TOL * (1.0 + math::abs(q)) {
                        return Side::On;
                    }
                    if q < p.x {
                        below += 1;
                    }
                }
                if below % 2 == 0 {
                    Side::Minus
                } else {
                    Side::Plus
                }
            }
            InterfaceCurve::Circle { center, radius } => {
                let gap = p.distance(*center) - radius;
                if math::abs(gap) <= ON_CURVE_TOL {
                    Side::On
                } else if gap > 0.0 {
                    Side::Plus
                } else {
                    Side::Minus
                }
            }
            InterfaceCurve::Star(s) => s.side(p),
            InterfaceCurve::Osculating(o) => o.side(p),
            InterfaceCurve::Generic(g) => (g.side)(p),
        }
    }

    pub fn closest_point(&self, p: Vec2) -> ClosestPoint {
        match self {
            InterfaceCurve::Points1D(points) => {
                let mut best = ClosestPoint { theta: 0.0, point: Vec2::ZERO, distance: f64::INFINITY, ambiguous: false };
                for (i, &q) in points.iter().enumerate() {
                    let d = math::abs(p.x - q);
                    if d < best.distance - ON_CURVE_TOL {
                        best = ClosestPoint { theta: i as f64, point: Vec2::new(q, 0.0), distance: d, ambiguous: false };
                    } else if d <= best.distance + ON_CURVE_TOL {
                        best.ambiguous = true;
                    }
                }
                best
            }
            InterfaceCurve::Circle { center, radius } => {
                let d = p - *center;
                let r = d.norm();
                if r < ON_CURVE_TOL {
                    let point = self.position(0.0);
                    return ClosestPoint { theta: 0.0, point, distance: *radius, ambiguous: true };
                }
                let theta = math::rem_euclid(math::atan2(d.y, d.x), TAU);
                let point = *center + *radius * Vec2::from_angle(theta);
                ClosestPoint { theta, point, distance: math::abs(r - radius), ambiguous: false }
            }
            InterfaceCurve::Osculating(o) => {
                let mut candidates: Vec<f64> = alloc::vec![0.0, 1.0, 2.0];
                for (k, arc) in o.arcs.iter().enumerate() {
                    if let Some(u) = arc.project(p) {
                        if (0.0..=1.0).contains(&u) {
                            candidates.push(k as f64 + u);
                        }
                    }
                }
                candidates.sort_by(f64::total_cmp);
                pick_closest(self, p, &candidates)
            }
            InterfaceCurve::Star(_) | InterfaceCurve::Generic(_) => self.sampled_closest_point(p),
        }
    }

    /// Coarse sampling followed by golden-section refinement.
    fn sampled_closest_point(&self, p: Vec2) -> ClosestPoint {
        let (a, b) = self.param_range();
        let closed = self.is_closed();
        let n = GENERIC_SAMPLES;
        let step = if closed { (b - a) / n as f64 } else { (b - a) / (n - 1) as f64 };
        let dist2 = |t: f64| {
            let d = p - self.position(t);
            d.dot(d)
        };
        let samples: Vec<f64> = (0..n).map(|i| dist2(a + i as f64 * step)).collect();
        let mut best = 0;
        for i in 1..n {
            if samples[i] < samples[best] {
                best = i;
            }
        }
        let (mut lo, mut hi) = (a + (best as f64 - 1.0) * step, a + (best as f64 + 1.0) * step);
        if !closed {
            lo = lo.max(a);
            hi = hi.min(b);
        }
        let ratio = 0.5 * (math::sqrt(5.0) - 1.0);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut f1, mut f2) = (dist2(x1), dist2(x2));
        for _ in 0..GOLDEN_ITERATIONS {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = dist2(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = dist2(x2);
            }
        }
        let mut theta = if f1 <= f2 { x1 } else { x2 };
        if dist2(theta) > samples[best] {
            theta = a + best as f64 * step;
        }
        if closed {
            theta = a + math::rem_euclid(theta - a, b - a);
        }
        let point = self.position(theta);
        let distance = p.distance(point);
        // A distinct (non-neighbouring) sample nearly as close flags a tie.
        let tie = math::sqrt(samples[best]) + ON_CURVE_TOL;
        let ambiguous = (0..n).any(|i| {
            let gap = if closed { (i as isize - best as isize).rem_euclid(n as isize).min((best as isize - i as isize).rem_euclid(n as isize)) } else { (i as isize - best as isize).abs() };
            gap > 2 && math::sqrt(samples[i]) <= tie
        });
        ClosestPoint { theta, point, distance, ambiguous }
    }

    pub fn frame_at(&self, theta: f64) -> Result<Frame, GeometryError> {
        match self {
            InterfaceCurve::Points1D(_) => {
                let k = math::floor(theta + 0.5).max(0.0) as usize;
                let nx = if k % 2 == 0 { 1.0 } else { -1.0 };
                Ok(Frame { normal: Vec2::new(nx, 0.0), tangent: Vec2::new(0.0, 1.0) })
            }
            InterfaceCurve::Circle { .. } => {
                let normal = Vec2::from_angle(theta);
                Ok(Frame { normal, tangent: normal.perp() })
            }
            InterfaceCurve::Star(s) => {
                let tangent = s.derivative(theta).normalized();
                Ok(Frame { normal: -tangent.perp(), tangent })
            }
            InterfaceCurve::Osculating(o) => {
                let t = math::rem_euclid(theta, 3.0);
                let nearest = math::floor(t + 0.5);
                if math::abs(t - nearest) < 1e-12 {
                    return Err(GeometryError::CornerPoint { theta });
                }
                let (k, u) = OsculatingCircles::split(t);
                Ok(arc_frame(&o.arcs[k], u))
            }
            InterfaceCurve::Generic(g) => {
                let tangent = (g.derivative)(theta).normalized();
                let mut normal = -tangent.perp();
                let p = (g.position)(theta);
                if (g.side)(p + 1e-7 * normal) == Side::Minus {
                    normal = -normal;
                }
                Ok(Frame { normal, tangent })
            }
        }
    }

    /// Frame that never fails: at a corner the arc ending there is used.
    pub fn one_sided_frame(&self, theta: f64) -> Frame {
        match (self, self.frame_at(theta)) {
            (_, Ok(f)) => f,
            (InterfaceCurve::Osculating(o), Err(_)) => {
                let k = (math::floor(math::rem_euclid(theta, 3.0) + 0.5) as usize + 2) % 3;
                arc_frame(&o.arcs[k], 1.0)
            }
            (_, Err(_)) => unreachable!("only osculating circles have corners"),
        }
    }

    /// Arc length of the parameter interval `[a, b]`.
    pub fn arc_length(&self, a: f64, b: f64) -> f64 {
        match self {
            InterfaceCurve::Points1D(_) => 0.0,
            InterfaceCurve::Circle { radius, .. } => radius * (b - a),
            _ => {
                // Composite 6-point Gauss, split at corners.
                let mut breaks = alloc::vec![a];
                for c in self.corner_parameters() {
                    for shift in [-3.0, 0.0, 3.0] {
                        let t = c + shift;
                        if t > a && t < b {
                            breaks.push(t);
                        }
                    }
                }
                breaks.push(b);
                breaks.sort_by(f64::total_cmp);
                let rule = crate::cfsolve::gauss_rule();
                let mut total = 0.0;
                for w in breaks.windows(2) {
                    let panels = (math::ceil((w[1] - w[0]) / 0.05) as usize).max(8);
                    let h = (w[1] - w[0]) / panels as f64;
                    for k in 0..panels {
                        let t0 = w[0] + k as f64 * h;
                        for q in 0..6 {
                            total += h * rule.weights[q] * self.derivative(t0 + h * rule.nodes[q]).norm();
                        }
                    }
                }
                total
            }
        }
    }

    pub fn length(&self) -> f64 {
        let (a, b) = self.param_range();
        self.arc_length(a, b)
    }

    /// Portions of the curve inside `footprint`, sorted by parameter.
    ///
    /// For closed curves a segment straddling the parameter seam is reported
    /// once, with `theta_a` shifted below the start of the range.
    pub fn clip_to_region(&self, footprint: &Footprint) -> Vec<CurveSegment> {
        let tol = 1e-12;
        match (self, footprint) {
            (InterfaceCurve::Points1D(points), Footprint::Interval { .. }) => points
                .iter()
                .enumerate()
                .filter(|(_, &q)| footprint.contains(Vec2::new(q, 0.0), tol))
                .map(|(i, _)| CurveSegment { theta_a: i as f64, theta_b: i as f64, length: 0.0 })
                .collect(),
            (InterfaceCurve::Points1D(_), _) | (_, Footprint::Interval { .. }) => Vec::new(),
            (InterfaceCurve::Circle { center, radius }, _) => {
                let crossings: Vec<f64> = circle_edge_crossings(*center, *radius, footprint)
                    .into_iter()
                    .map(|a| math::rem_euclid(a, TAU))
                    .collect();
                let inside = |t: f64| footprint.contains(self.position(t), tol);
                self.assemble_segments((0.0, TAU), true, crossings, inside)
            }
            (InterfaceCurve::Osculating(o), _) => {
                let mut out = Vec::new();
                for (k, arc) in o.arcs.iter().enumerate() {
                    let crossings: Vec<f64> = circle_edge_crossings(arc.center, arc.radius, footprint)
                        .into_iter()
                        .filter_map(|angle| {
                            let u = wrap_pi(angle - arc.start) / arc.sweep;
                            (u > 0.0 && u < 1.0).then_some(k as f64 + u)
                        })
                        .collect();
                    let inside = |t: f64| footprint.contains(self.position(t), tol);
                    out.extend(self.assemble_segments((k as f64, k as f64 + 1.0), false, crossings, inside));
                }
                out
            }
            (InterfaceCurve::Star(_) | InterfaceCurve::Generic(_), _) => {
                let (a, b) = self.param_range();
                let closed = self.is_closed();
                let inside = |t: f64| footprint.contains(self.position(t), tol);
                let n = CLIP_SAMPLES;
                let step = (b - a) / n as f64;
                let mut crossings = Vec::new();
                let mut prev = inside(a);
                for i in 1..=n {
                    let t = a + i as f64 * step;
                    let cur = inside(t);
                    if cur != prev {
                        let (mut lo, mut hi) = (t - step, t);
                        for _ in 0..60 {
                            let mid = 0.5 * (lo + hi);
                            if inside(mid) == prev {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        let c = 0.5 * (lo + hi);
                        if !closed || c < b {
                            crossings.push(c);
                        }
                    }
                    prev = cur;
                }
                self.assemble_segments((a, b), closed, crossings, inside)
            }
        }
    }

    /// Splits `range` at the sorted crossings and keeps the inside pieces.
    fn assemble_segments<F: Fn(f64) -> bool>(&self, range: (f64, f64), periodic: bool, mut crossings: Vec<f64>, inside: F) -> Vec<CurveSegment> {
        let (a, b) = range;
        let period = b - a;
        crossings.sort_by(f64::total_cmp);
        crossings.dedup_by(|x, y| math::abs(*x - *y) < 1e-14);

        let mut pieces: Vec<(f64, f64)> = Vec::new();
        if periodic {
            if crossings.is_empty() {
                if inside(a) {
                    pieces.push((a, b));
                }
            } else {
                for i in 0..crossings.len() {
                    let lo = crossings[i];
                    let hi = if i + 1 < crossings.len() { crossings[i + 1] } else { crossings[0] + period };
                    if inside(0.5 * (lo + hi)) {
                        pieces.push((lo, hi));
                    }
                }
                // Join pieces separated by tangential crossings.
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for piece in pieces {
                    match merged.last_mut() {
                        Some(last) if math::abs(last.1 - piece.0) < 1e-14 => last.1 = piece.1,
                        _ => merged.push(piece),
                    }
                }
                if merged.len() > 1 {
                    let last = merged[merged.len() - 1];
                    if math::abs(last.1 - (merged[0].0 + period)) < 1e-14 {
                        merged[0].0 = last.0 - period;
                        merged.pop();
                    }
                }
                pieces = merged
                    .into_iter()
                    .map(|(lo, hi)| if hi > b && lo > 0.5 * (a + b) { (lo - period, hi - period) } else { (lo, hi) })
                    .collect();
                pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
            }
        } else {
            let mut cuts = alloc::vec![a];
            cuts.extend(crossings.iter().copied().filter(|&c| c > a && c < b));
            cuts.push(b);
            for w in cuts.windows(2) {
                if w[1] - w[0] > 0.0 && inside(0.5 * (w[0] + w[1])) {
                    match pieces.last_mut() {
                        Some(last) if last.1 == w[0] => last.1 = w[1],
                        _ => pieces.push((w[0], w[1])),
                    }
                }
            }
        }
        pieces
            .into_iter()
            .map(|(lo, hi)| CurveSegment { theta_a: lo, theta_b: hi, length: self.arc_length(lo, hi) })
            .collect()
    }
}

fn arc_frame(arc: &Arc, u: f64) -> Frame {
    let radial = Vec2::from_angle(arc.angle(u));
    // Ω⁺ is the circle interior, so the normal points at the centre.
    let tangent = if arc.sweep > 0.0 { radial.perp() } else { -radial.perp() };
    Frame { normal: -radial, tangent }
}

fn pick_closest(curve: &InterfaceCurve, p: Vec2, sorted_candidates: &[f64]) -> ClosestPoint {
    let mut best: Option<ClosestPoint> = None;
    for &theta in sorted_candidates {
        let point = curve.position(theta);
        let distance = p.distance(point);
        match best.as_mut() {
            None => best = Some(ClosestPoint { theta, point, distance, ambiguous: false }),
            Some(b) => {
                if distance < b.distance - ON_CURVE_TOL {
                    *b = ClosestPoint { theta, point, distance, ambiguous: false };
                } else if distance <= b.distance + ON_CURVE_TOL && point.distance(b.point) > ON_CURVE_TOL {
                    b.ambiguous = true;
                }
            }
        }
    }
    best.expect("at least one candidate")
}

/// Angles at which a circle crosses the edges of a square footprint.
fn circle_edge_crossings(center: Vec2, radius: f64, footprint: &Footprint) -> Vec<f64> {
    let mut out = Vec::new();
    for (p, q) in footprint.edges() {
        let d = q - p;
        let f = p - center;
        let a = d.dot(d);
        let b = 2.0 * f.dot(d);
        let c = f.dot(f) - radius * radius;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            continue;
        }
        let root = math::sqrt(disc);
        for s in [(-b - root) / (2.0 * a), (-b + root) / (2.0 * a)] {
            if (-1e-14..=1.0 + 1e-14).contains(&s) {
                let x = p + s * d - center;
                out.push(math::atan2(x.y, x.x));
            }
        }
    }
    out
}

/// Wraps an angle into `(-π, π]`.
fn wrap_pi(a: f64) -> f64 {
    let w = math::rem_euclid(a + PI, TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}
