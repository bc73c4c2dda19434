//! Uniform periodic Cartesian grid, field storage and side classification.

use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::{InterfaceCurve, Side, Vec2};

/// Tap offsets of the five-point stencil, centre excluded.
pub const TAP_OFFSETS: [isize; 4] = [-2, -1, 1, 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("need at least 5 nodes per axis, got {0}")]
    TooFewNodes(usize),
    #[error("only square grids are supported (axis extents {0} and {1} differ)")]
    Rectangular(f64, f64),
    #[error("empty or inverted domain [{0}, {1}]")]
    Domain(f64, f64),
}

/// Square periodic grid with `n` nodes per axis; node `i` sits at
/// `lower + i·Δx` and indices wrap modulo `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    n: usize,
    dx: f64,
}

impl Grid {
    pub fn new(dim: usize, lower: [f64; 2], upper: [f64; 2], n: usize) -> Result<Self, GridError> {
        if dim != 1 && dim != 2 {
            return Err(GridError::Dimension(dim));
        }
        if n < 5 {
            return Err(GridError::TooFewNodes(n));
        }
        for axis in 0..dim {
            if !(upper[axis] > lower[axis]) {
                return Err(GridError::Domain(lower[axis], upper[axis]));
            }
        }
        let wx = upper[0] - lower[0];
        if dim == 2 {
            let wy = upper[1] - lower[1];
            if (wx - wy).abs() > 1e-14 * wx.max(wy) {
                return Err(GridError::Rectangular(wx, wy));
            }
        }
        Ok(Grid { dim, lower, upper, n, dx: wx / n as f64 })
    }

    pub fn line(lower: f64, upper: f64, n: usize) -> Result<Self, GridError> {
        Grid::new(1, [lower, 0.0], [upper, 0.0], n)
    }

    pub fn square(lower: f64, upper: f64, n: usize) -> Result<Self, GridError> {
        Grid::new(2, [lower, lower], [upper, upper], n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn lower(&self) -> [f64; 2] {
        self.lower
    }

    pub fn upper(&self) -> [f64; 2] {
        self.upper
    }

    pub fn node_count(&self) -> usize {
        if self.dim == 1 {
            self.n
        } else {
            self.n * self.n
        }
    }

    /// Periodic wrap of a (possibly negative) axis index.
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }

    /// Node index of `(i, j)`; `j` is ignored in 1D. Row-major with x fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        if self.dim == 1 {
            i
        } else {
            j * self.n + i
        }
    }

    pub fn ij(&self, node: usize) -> (usize, usize) {
        if self.dim == 1 {
            (node, 0)
        } else {
            (node % self.n, node / self.n)
        }
    }

    fn axis_coord(&self, axis: usize, i: isize) -> f64 {
        // (i·w)/n keeps node coordinates correctly rounded, e.g. 30/100 == 0.3.
        self.lower[axis] + (i as f64 * (self.upper[axis] - self.lower[axis])) / self.n as f64
    }

    pub fn coords(&self, node: usize) -> Vec2 {
        let (i, j) = self.ij(node);
        if self.dim == 1 {
            Vec2::new(self.axis_coord(0, i as isize), 0.0)
        } else {
            Vec2::new(self.axis_coord(0, i as isize), self.axis_coord(1, j as isize))
        }
    }

    /// Index of the node `offset` steps from `node` along `axis`, wrapped.
    pub fn neighbor(&self, node: usize, axis: usize, offset: isize) -> usize {
        let (i, j) = self.ij(node);
        if axis == 0 {
            self.index(self.wrap(i as isize + offset), j)
        } else {
            self.index(i, self.wrap(j as isize + offset))
        }
    }

    /// Unwrapped position of a tap relative to its owner node.
    pub fn tap_position(&self, node: usize, axis: usize, offset: isize) -> Vec2 {
        let (i, j) = self.ij(node);
        if axis == 0 {
            Vec2::new(self.axis_coord(0, i as isize + offset), if self.dim == 1 { 0.0 } else { self.axis_coord(1, j as isize) })
        } else {
            Vec2::new(self.axis_coord(0, i as isize), self.axis_coord(1, j as isize + offset))
        }
    }
}

/// Grid fields at one time level; `v = ∂u/∂t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl WaveState {
    pub fn zeros(nodes: usize, t: f64) -> Self {
        WaveState { u: alloc::vec![0.0; nodes], v: alloc::vec![0.0; nodes], t }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0, |m, x| if x.abs() > m || x.is_nan() { x.abs() } else { m })
    }
}

/// A stencil tap of an affected node that lies on the opposite side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub axis: usize,
    pub offset: isize,
    /// Wrapped grid index of the tap.
    pub index: usize,
    /// Unwrapped tap position (next to the owner node).
    pub position: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffectedNode {
    pub node: usize,
    pub taps: Vec<Tap>,
}

/// Per-node side plus the affected nodes with their opposite-side taps.
#[derive(Debug, Clone, PartialEq)]
pub struct SideMap {
    pub sides: Vec<Side>,
    pub affected: Vec<AffectedNode>,
}

impl SideMap {
    /// Every node on one side; no interface.
    pub fn uniform(grid: &Grid, side: Side) -> Self {
        SideMap { sides: alloc::vec![side; grid.node_count()], affected: Vec::new() }
    }

    pub fn side(&self, node: usize) -> Side {
        self.sides[node]
    }

    pub fn affected_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.affected.iter().map(|a| a.node)
    }
}

/// Assigns every node the side of the curve (on-curve nodes go to Ω⁻) and
/// collects nodes whose stencil reaches across the interface.
pub fn classify_nodes(grid: &Grid, curve: &InterfaceCurve) -> SideMap {
    let sides: Vec<Side> = (0..grid.node_count()).map(|k| curve.side_of(grid.coords(k)).resolved()).collect();
    let mut affected = Vec::new();
    for node in 0..grid.node_count() {
        let mut taps = Vec::new();
        for axis in 0..grid.dim() {
            for offset in TAP_OFFSETS {
                let index = grid.neighbor(node, axis, offset);
                if sides[index] != sides[node] {
                    taps.push(Tap { axis, offset, index, position: grid.tap_position(node, axis, offset) });
                }
            }
        }
        if !taps.is_empty() {
            affected.push(AffectedNode { node, taps });
        }
    }
    SideMap { sides, affected }
}
