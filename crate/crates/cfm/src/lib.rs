//! Simulation harness, output formats and CLI support for the correction
//! function method implemented in `cfm-core`.

pub mod app;
pub mod config;
pub mod harness;
pub mod io;
pub mod parallel;

pub use config::{ConfigError, Mode, RunConfig, StepRule};
pub use harness::{ErrorReport, HarnessError, RunResult};
pub use parallel::Rayon;
