//! Fourth-order five-point second-derivative operator and its corrected form.

use thiserror::Error;

use crate::geometry::Side;
use crate::grid::{Grid, SideMap, TAP_OFFSETS};

/// Offsets −2..=2 and the matching weights, to be divided by 12Δx².
pub const OFFSETS: [isize; 5] = [-2, -1, 0, 1, 2];
pub const COEFFS: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

/// Weight of a single tap, already divided by 12Δx².
pub fn tap_weight(offset: isize, dx: f64) -> f64 {
    COEFFS[(offset + 2) as usize] / (12.0 * dx * dx)
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum StencilError {
    #[error("no correction supplied for opposite-side tap {tap} of node {node}")]
    MissingCorrection { node: usize, tap: usize },
}

/// Sum over axes of the five-point second derivative with periodic wrap.
pub fn laplacian_at(u: &[f64], node: usize, grid: &Grid) -> f64 {
    let scale = 1.0 / (12.0 * grid.dx() * grid.dx());
    let (i, j) = grid.ij(node);
    let n = grid.n();
    let mut acc = 0.0;
    for axis in 0..grid.dim() {
        let mut s = 0.0;
        for (k, &o) in OFFSETS.iter().enumerate() {
            let idx = if axis == 0 {
                grid.index((i as isize + o).rem_euclid(n as isize) as usize, j)
            } else {
                grid.index(i, (j as isize + o).rem_euclid(n as isize) as usize)
            };
            s += COEFFS[k] * u[idx];
        }
        acc += s;
    }
    acc * scale
}

/// Laplacian of the whole field into `out`.
pub fn laplacian_field(u: &[f64], grid: &Grid, out: &mut [f64]) {
    let n = grid.n();
    let scale = 1.0 / (12.0 * grid.dx() * grid.dx());
    if grid.dim() == 1 {
        for i in 0..n {
            let w = |o: isize| u[(i as isize + o).rem_euclid(n as isize) as usize];
            out[i] = scale * (-w(-2) + 16.0 * w(-1) - 30.0 * u[i] + 16.0 * w(1) - w(2));
        }
    } else {
        for j in 0..n {
            let row = j * n;
            let jm2 = ((j + n - 2) % n) * n;
            let jm1 = ((j + n - 1) % n) * n;
            let jp1 = ((j + 1) % n) * n;
            let jp2 = ((j + 2) % n) * n;
            for i in 0..n {
                let im2 = (i + n - 2) % n;
                let im1 = (i + n - 1) % n;
                let ip1 = (i + 1) % n;
                let ip2 = (i + 2) % n;
                let c = u[row + i];
                let sx = -u[row + im2] + 16.0 * u[row + im1] - 30.0 * c + 16.0 * u[row + ip1] - u[row + ip2];
                let sy = -u[jm2 + i] + 16.0 * u[jm1 + i] - 30.0 * c + 16.0 * u[jp1 + i] - u[jp2 + i];
                out[row + i] = scale * (sx + sy);
            }
        }
    }
}

/// Signed contribution of one corrected tap.
///
/// A node in Ω⁺ reads an Ω⁻ tap as `u⁻ + D`; a node in Ω⁻ reads an Ω⁺ tap as
/// `u⁺ − D`. The result does not depend on `u`, which is what lets the
/// correction act as a source term.
pub fn correction_source(node_side: Side, weight: f64, d: f64) -> f64 {
    match node_side {
        Side::Plus => weight * d,
        _ => -weight * d,
    }
}

/// Corrected Laplacian at `node`. `corrections` maps tap grid index → D.
pub fn corrected_laplacian_at(
    u: &[f64],
    node: usize,
    grid: &Grid,
    sidemap: &SideMap,
    corrections: &[(usize, f64)],
) -> Result<f64, StencilError> {
    let side = sidemap.side(node);
    let mut value = laplacian_at(u, node, grid);
    for axis in 0..grid.dim() {
        for offset in TAP_OFFSETS {
            let tap = grid.neighbor(node, axis, offset);
            if sidemap.side(tap) == side {
                continue;
            }
            let d = corrections
                .iter()
                .find(|(idx, _)| *idx == tap)
                .map(|(_, d)| *d)
                .ok_or(StencilError::MissingCorrection { node, tap })?;
            value += correction_source(side, tap_weight(offset, grid.dx()), d);
        }
    }
    Ok(value)
}
