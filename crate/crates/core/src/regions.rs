//! Node-centred space-time regions and the tiling over all affected nodes.

use alloc::vec::Vec;

use thiserror::Error;

use crate::exec::Executor;
use crate::geometry::{CurveSegment, Footprint, Frame, InterfaceCurve, Vec2};
use crate::grid::{AffectedNode, Grid, SideMap, Tap};
use crate::interp::LocalBox;
use crate::math;

/// Default and allowed range of `L / √(Δx² + Δy²)`.
pub const DEFAULT_L_FACTOR: f64 = 4.0;
pub const L_FACTOR_RANGE: (f64, f64) = (3.0, 5.0);
const L_FACTOR_STEP: f64 = 0.5;
const COVERAGE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum RegionError {
    #[error("L factor {0} outside [3, 5]")]
    LFactor(f64),
    #[error("region of node {node} does not contain all opposite-side taps")]
    CoverageFailure { node: usize },
    #[error("region of node {node} contains no part of the interface")]
    EmptyInterface { node: usize },
    #[error("curve dimension {curve} does not match grid dimension {grid}")]
    Dimension { curve: usize, grid: usize },
}

/// Rotated square (interval in 1D) × one time step, owned by one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub node: usize,
    pub theta0: f64,
    pub p0: Vec2,
    pub frame: Frame,
    pub footprint: Footprint,
    /// Local coordinates; the slab starts at `bbox.t0`.
    pub bbox: LocalBox,
    pub taps: Vec<Tap>,
    pub segments: Vec<CurveSegment>,
}

impl Region {
    pub fn side(&self) -> f64 {
        self.bbox.side
    }

    /// Same region with the time slab moved to `[t0, t0 + Δt]`.
    pub fn at_time(&self, t0: f64) -> Region {
        let mut r = self.clone();
        r.bbox.t0 = t0;
        r
    }
}

pub fn region_side(grid: &Grid, l_factor: f64) -> f64 {
    l_factor * math::sqrt(2.0) * grid.dx()
}

/// Builds the region of one affected node.
pub fn build_region(
    affected: &AffectedNode,
    curve: &InterfaceCurve,
    grid: &Grid,
    l_factor: f64,
    t0: f64,
    dt: f64,
) -> Result<Region, RegionError> {
    if !(L_FACTOR_RANGE.0..=L_FACTOR_RANGE.1).contains(&l_factor) {
        return Err(RegionError::LFactor(l_factor));
    }
    if curve.dim() != grid.dim() {
        return Err(RegionError::Dimension { curve: curve.dim(), grid: grid.dim() });
    }
    let node = affected.node;
    let x = grid.coords(node);
    let cp = curve.closest_point(x);
    let frame = curve.one_sided_frame(cp.theta);
    let dx = grid.dx();
    let (footprint, bbox) = if grid.dim() == 1 {
        // Two nodes either side of the interface point.
        let (lo, hi) = (cp.point.x - 2.0 * dx, cp.point.x + 2.0 * dx);
        let side = hi - lo;
        let bbox = LocalBox {
            dim: 1,
            origin: Vec2::new(lo, 0.0),
            axes: [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            side,
            t0,
            dt,
            margin: [dx / side, 0.0],
        };
        (Footprint::Interval { lo, hi }, bbox)
    } else {
        let side = region_side(grid, l_factor);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        // Edges at 45° to the frame so the diagonals run along n̂ and t̂.
        let axes = [s * (frame.normal + frame.tangent), s * (frame.tangent - frame.normal)];
        let origin = cp.point - (0.5 * side) * axes[0] - (0.5 * side) * axes[1];
        let bbox = LocalBox { dim: 2, origin, axes, side, t0, dt, margin: [dx / side, 0.0] };
        (Footprint::Square { center: cp.point, axes, side }, bbox)
    };
    if affected.taps.iter().any(|t| !footprint.contains(t.position, COVERAGE_TOL * (1.0 + dx))) {
        return Err(RegionError::CoverageFailure { node });
    }
    let segments: Vec<CurveSegment> = curve
        .clip_to_region(&footprint)
        .into_iter()
        .filter(|s| grid.dim() == 1 || s.length > 1e-12 * bbox.side)
        .collect();
    if segments.is_empty() {
        return Err(RegionError::EmptyInterface { node });
    }
    Ok(Region { node, theta0: cp.theta, p0: cp.point, frame, footprint, bbox, taps: affected.taps.clone(), segments })
}

/// One region per affected node, in node order, with a shared L.
#[derive(Debug, Clone, PartialEq)]
pub struct Tiling {
    pub regions: Vec<Region>,
    /// The L factor actually used after any coverage retries.
    pub l_factor: f64,
    pub dt: f64,
}

impl Tiling {
    pub fn empty(l_factor: f64, dt: f64) -> Self {
        Tiling { regions: Vec::new(), l_factor, dt }
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn region_of(&self, node: usize) -> Option<&Region> {
        self.regions.binary_search_by_key(&node, |r| r.node).ok().map(|k| &self.regions[k])
    }
}

/// Builds every region; on a coverage failure the shared L factor grows by
/// 0.5 and the whole tiling is rebuilt, up to the upper bound of the range.
pub fn build_tiling<E: Executor>(
    sidemap: &SideMap,
    curve: &InterfaceCurve,
    grid: &Grid,
    l_factor: f64,
    dt: f64,
    exec: &E,
) -> Result<Tiling, RegionError> {
    if !(L_FACTOR_RANGE.0..=L_FACTOR_RANGE.1).contains(&l_factor) {
        return Err(RegionError::LFactor(l_factor));
    }
    let mut factor = l_factor;
    loop {
        let built = exec.map(sidemap.affected.len(), |k| build_region(&sidemap.affected[k], curve, grid, factor, 0.0, dt));
        match built.into_iter().collect::<Result<Vec<_>, _>>() {
            Ok(regions) => return Ok(Tiling { regions, l_factor: factor, dt }),
            Err(RegionError::CoverageFailure { node }) => {
                if factor + L_FACTOR_STEP > L_FACTOR_RANGE.1 + 1e-12 {
                    return Err(RegionError::CoverageFailure { node });
                }
                factor += L_FACTOR_STEP;
            }
            Err(e) => return Err(e),
        }
    }
}
