//! Manufactured problems: branch solutions with hand-coded derivatives, from
//! which forcing, initial data and jump data are derived.

use core::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2, TAU};
use core::fmt;
use core::str::FromStr;

use crate::geometry::{InterfaceCurve, OsculatingCircles, Side, StarCurve, Vec2};
use crate::math;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Closed-form branch solution `u(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    Zero,
    /// `amp·sin(2πx)·cos(2πt)`
    SineX { amp: f64 },
    /// `amp·sin(2πx)·sin(2πy)·cos(2πt)`
    SineXY { amp: f64 },
    /// `e^{πx}·sin(3πy)·cos(2πt)`
    ExpSine,
    /// `e^{x+y}·cos(2πt)`
    ExpSum,
    /// `sin(2π(x+y) − ωt)`
    PlaneWave { omega: f64 },
}

/// k-th derivative of cos(2πt).
fn cos_time(t: f64, k: u32) -> f64 {
    math::powi(TAU, k) * math::cos(TAU * t + k as f64 * 0.5 * PI)
}

impl Field {
    pub fn value(&self, p: Vec2, t: f64) -> f64 {
        self.time_derivative(p, t, 0)
    }

    /// Spatial factor and its gradient and Laplacian, for separable fields.
    fn spatial(&self, p: Vec2) -> (f64, Vec2, f64) {
        match *self {
            Field::Zero | Field::PlaneWave { .. } => (0.0, Vec2::ZERO, 0.0),
            Field::SineX { amp } => {
                let s = amp * math::sin(TAU * p.x);
                (s, Vec2::new(amp * TAU * math::cos(TAU * p.x), 0.0), -TAU * TAU * s)
            }
            Field::SineXY { amp } => {
                let (sx, cx) = (math::sin(TAU * p.x), math::cos(TAU * p.x));
                let (sy, cy) = (math::sin(TAU * p.y), math::cos(TAU * p.y));
                let s = amp * sx * sy;
                (s, Vec2::new(amp * TAU * cx * sy, amp * TAU * sx * cy), -2.0 * TAU * TAU * s)
            }
            Field::ExpSine => {
                let e = math::exp(PI * p.x);
                let (s3, c3) = (math::sin(3.0 * PI * p.y), math::cos(3.0 * PI * p.y));
                let s = e * s3;
                (s, Vec2::new(PI * s, 3.0 * PI * e * c3), (PI * PI - 9.0 * PI * PI) * s)
            }
            Field::ExpSum => {
                let s = math::exp(p.x + p.y);
                (s, Vec2::new(s, s), 2.0 * s)
            }
        }
    }

    /// ∂ᵏu/∂tᵏ.
    pub fn time_derivative(&self, p: Vec2, t: f64, k: u32) -> f64 {
        match *self {
            Field::Zero => 0.0,
            Field::PlaneWave { omega } => {
                let phase = TAU * (p.x + p.y) - omega * t;
                math::powi(-omega, k) * math::sin(phase + k as f64 * 0.5 * PI)
            }
            _ => self.spatial(p).0 * cos_time(t, k),
        }
    }

    pub fn gradient(&self, p: Vec2, t: f64) -> Vec2 {
        match *self {
            Field::Zero => Vec2::ZERO,
            Field::PlaneWave { omega } => {
                let g = TAU * math::cos(TAU * (p.x + p.y) - omega * t);
                Vec2::new(g, g)
            }
            _ => cos_time(t, 0) * self.spatial(p).1,
        }
    }

    pub fn laplacian(&self, p: Vec2, t: f64) -> f64 {
        match *self {
            Field::Zero => 0.0,
            Field::PlaneWave { omega } => -2.0 * TAU * TAU * math::sin(TAU * (p.x + p.y) - omega * t),
            _ => self.spatial(p).2 * cos_time(t, 0),
        }
    }

    /// `∇²u − (1/c²)∂ₜₜu`.
    pub fn forcing(&self, p: Vec2, t: f64, c: f64) -> f64 {
        self.laplacian(p, t) - self.time_derivative(p, t, 2) / (c * c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemId {
    Line1d,
    Circle,
    Star,
    Osculating,
    EmShield,
}

impl ProblemId {
    pub const ALL: [ProblemId; 5] = [ProblemId::Line1d, ProblemId::Circle, ProblemId::Star, ProblemId::Osculating, ProblemId::EmShield];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemId::Line1d => "line1d",
            ProblemId::Circle => "circle",
            ProblemId::Star => "star",
            ProblemId::Osculating => "osculating",
            ProblemId::EmShield => "em-shield",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown problem id (expected line1d, circle, star, osculating or em-shield)")]
pub struct UnknownProblem;

impl FromStr for ProblemId {
    type Err = UnknownProblem;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProblemId::ALL.into_iter().find(|p| p.as_str() == s).ok_or(UnknownProblem)
    }
}

/// A manufactured interface problem on a square (or interval) periodic domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub id: ProblemId,
    pub dim: usize,
    /// Wave speed.
    pub c: f64,
    /// `None` for the continuous (interface-free) variant.
    pub curve: Option<InterfaceCurve>,
    pub plus: Field,
    pub minus: Field,
    /// Domain `[lower, upper]` along every axis.
    pub lower: f64,
    pub upper: f64,
    /// One temporal period; the default end time.
    pub period: f64,
    /// Default Δt/Δx.
    pub default_gamma: f64,
}

impl ProblemSpec {
    pub fn by_id(id: ProblemId) -> ProblemSpec {
        match id {
            ProblemId::Line1d => problem_1d_two_interfaces(),
            ProblemId::Circle => problem_circle(),
            ProblemId::Star => problem_star(),
            ProblemId::Osculating => problem_osculating(),
            ProblemId::EmShield => problem_em_shielding(SPEED_OF_LIGHT),
        }
    }

    pub fn field(&self, side: Side) -> &Field {
        match side {
            Side::Plus => &self.plus,
            _ => &self.minus,
        }
    }

    /// Exact solution on the branch of `side` (on-curve counts as Ω⁻).
    pub fn u(&self, side: Side, p: Vec2, t: f64) -> f64 {
        self.field(side).value(p, t)
    }

    pub fn ut(&self, side: Side, p: Vec2, t: f64) -> f64 {
        self.field(side).time_derivative(p, t, 1)
    }

    pub fn forcing(&self, side: Side, p: Vec2, t: f64) -> f64 {
        self.field(side).forcing(p, t, self.c)
    }

    /// `f_d = f⁺ − f⁻`.
    pub fn forcing_difference(&self, p: Vec2, t: f64) -> f64 {
        self.plus.forcing(p, t, self.c) - self.minus.forcing(p, t, self.c)
    }

    /// `α = [u]`.
    pub fn alpha(&self, p: Vec2, t: f64) -> f64 {
        self.plus.value(p, t) - self.minus.value(p, t)
    }

    /// `β = [∂u/∂n]` for the unit normal `n`.
    pub fn beta(&self, p: Vec2, n: Vec2, t: f64) -> f64 {
        n.dot(self.plus.gradient(p, t) - self.minus.gradient(p, t))
    }

    /// ∂ᵏD/∂tᵏ of the exact correction function `D = u⁺ − u⁻`.
    pub fn correction_time_derivative(&self, p: Vec2, t: f64, k: u32) -> f64 {
        self.plus.time_derivative(p, t, k) - self.minus.time_derivative(p, t, k)
    }

    /// Same problem with the interface removed and u⁻ filling the domain.
    pub fn continuous(&self) -> ProblemSpec {
        ProblemSpec { curve: None, plus: self.minus, ..self.clone() }
    }
}

pub fn problem_1d_two_interfaces() -> ProblemSpec {
    ProblemSpec {
        id: ProblemId::Line1d,
        dim: 1,
        c: 1.0,
        curve: Some(InterfaceCurve::points_1d(alloc::vec![0.3, 0.7])),
        plus: Field::SineX { amp: 2.0 },
        minus: Field::SineX { amp: 1.0 },
        lower: 0.0,
        upper: 1.0,
        period: 1.0,
        default_gamma: 1.0,
    }
}

/// Wave speed of the 2D abstract problems: their standing waves
/// `sin(2πx)sin(2πy)cos(2πt)` are free solutions exactly when c = 1/√2.
pub const PLANAR_WAVE_SPEED: f64 = FRAC_1_SQRT_2;

fn unit_star(center: Vec2) -> InterfaceCurve {
    InterfaceCurve::Star(StarCurve { center, r0: 0.25, r1: 0.05, lobes: 5 })
}

pub fn problem_circle() -> ProblemSpec {
    ProblemSpec {
        id: ProblemId::Circle,
        dim: 2,
        c: PLANAR_WAVE_SPEED,
        curve: Some(InterfaceCurve::Circle { center: Vec2::new(0.5, 0.5), radius: 0.25 }),
        plus: Field::SineXY { amp: -2.0 },
        minus: Field::SineXY { amp: 1.0 },
        lower: 0.0,
        upper: 1.0,
        period: 1.0,
        default_gamma: 1.0,
    }
}

pub fn problem_star() -> ProblemSpec {
    ProblemSpec {
        id: ProblemId::Star,
        dim: 2,
        c: PLANAR_WAVE_SPEED,
        curve: Some(unit_star(Vec2::new(0.5, 0.5))),
        plus: Field::Zero,
        minus: Field::ExpSine,
        lower: 0.0,
        upper: 1.0,
        period: 1.0,
        default_gamma: 1.0,
    }
}

pub fn osculating_curve() -> InterfaceCurve {
    let h = 0.5 * math::sqrt(3.0);
    InterfaceCurve::Osculating(OsculatingCircles::new(
        [Vec2::new(0.5 + h, 0.9), Vec2::new(0.5 - h, 0.9), Vec2::new(0.5, -0.6)],
        h,
    ))
}

pub fn problem_osculating() -> ProblemSpec {
    ProblemSpec {
        id: ProblemId::Osculating,
        dim: 2,
        c: PLANAR_WAVE_SPEED,
        curve: Some(osculating_curve()),
        plus: Field::SineXY { amp: 0.5 },
        minus: Field::ExpSum,
        lower: 0.0,
        upper: 1.0,
        period: 1.0,
        default_gamma: 1.0,
    }
}

/// Scalar potential of an actively shielded diagonal plane wave. `c` may be
/// the physical speed of light or 1 for the nondimensional variant.
pub fn problem_em_shielding(c: f64) -> ProblemSpec {
    let omega = 2.0 * SQRT_2 * PI * c;
    ProblemSpec {
        id: ProblemId::EmShield,
        dim: 2,
        c,
        curve: Some(unit_star(Vec2::ZERO)),
        plus: Field::PlaneWave { omega },
        minus: Field::Zero,
        lower: -0.5,
        upper: 0.5,
        period: TAU / omega,
        default_gamma: 0.75 / c,
    }
}
