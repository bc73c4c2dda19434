//! Correction function method (CFM) for the constant-coefficient wave equation
//! with interface jump conditions.
//!
//! The crate is `no_std` + `alloc`: it contains the interface geometry, the
//! periodic grid and fourth-order stencil, the node-centred region tiling, the
//! space-time Hermite interpolant, the least-squares correction-function solve
//! and the RK4 marcher with stage-consistent corrections. File formats, the CLI
//! and parallel scheduling live in the `cfm` companion crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cfsolve;
pub mod exec;
pub mod geometry;
pub mod grid;
pub mod interp;
pub mod march;
pub(crate) mod math;
pub mod problems;
pub mod regions;
pub mod stencil;

pub use cfsolve::{CfParams, CfSystem, QuadratureRule, RegionOperator, SolveError, SolveMethod};
pub use exec::{Executor, Serial};
pub use geometry::{CurveSegment, Footprint, Frame, InterfaceCurve, Side, Vec2};
pub use grid::{Grid, GridError, SideMap, WaveState};
pub use interp::{LocalBox, SpaceTimeInterpolant};
pub use march::{CorrectionMode, Simulation, StepError};
pub use problems::{ProblemId, ProblemSpec};
pub use regions::{Region, RegionError, Tiling};
