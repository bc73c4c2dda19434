//! Mode dispatch: runs a validated configuration and writes its outputs.

use std::fs;
use std::path::Path;

use cfm_core::march::SimOptions;
use cfm_core::{CfParams, Executor};

use crate::config::{Mode, RunConfig};
use crate::harness::{self, Convergence, HarnessError, RunSpec};
use crate::io;

fn sim_options(config: &RunConfig) -> SimOptions {
    SimOptions {
        l_factor: config.l_factor,
        params: CfParams { c1: config.c1, c2: config.c2, method: config.solver, ..CfParams::default() },
        mode: config.stepper,
        ..SimOptions::default()
    }
}

fn write_convergence(dir: &Path, conv: &Convergence) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    io::write_errors_csv(&dir.join("errors.csv"), &conv.reports)?;
    io::write_order_json(&dir.join("order.json"), conv)
}

/// Executes `config`, writing files under `config.out`. Returns human-readable
/// summary lines.
pub fn execute<E: Executor>(config: &RunConfig, exec: &E) -> Result<Vec<String>, HarnessError> {
    config.validate()?;
    let out = &config.out;
    fs::create_dir_all(out)?;
    let problem = config.problem_spec();
    let t_end = config.t_end();
    let mut options = sim_options(config);
    let mut lines = Vec::new();
    if config.calibrate {
        let (c1, c2, l2) = harness::calibrate(&problem, config.ns[0], &config.step, t_end, options, exec)?;
        options.params.c1 = c1;
        options.params.c2 = c2;
        io::write_json(&out.join("calibration.json"), &serde_json::json!({ "N": config.ns[0], "c1": c1, "c2": c2, "L2": l2 }))?;
        lines.push(format!("calibrated c1 = {c1}, c2 = {c2} (L2 = {l2:.3e} at N = {})", config.ns[0]));
    }
    match config.mode {
        Mode::Run => {
            let mut reports = Vec::new();
            for &n in &config.ns {
                let mut spec = RunSpec::landing(problem.clone(), n, &config.step, t_end, options);
                spec.snapshot_every = config.snapshot_every;
                let result = harness::run(&spec, exec)?;
                for snap in &result.snapshots {
                    io::write_snapshot(&out.join(format!("snapshot_N{n}_step{:05}.csv", snap.step)), problem.id, &result.grid, snap)?;
                }
                io::write_tiling_json(&out.join(format!("tiling_N{n}.json")), &result.tiling)?;
                io::write_diagnostics_json(&out.join(format!("diagnostics_N{n}.json")), &result.diagnostics)?;
                lines.push(format!(
                    "N = {n}: {} steps of dt = {:.6e}, L2 = {:.6e}, Linf = {:.6e}",
                    result.report.steps, result.report.dt, result.report.l2, result.report.linf
                ));
                reports.push(result.report);
            }
            io::write_errors_csv(&out.join("errors.csv"), &reports)?;
        }
        Mode::Converge => {
            let conv = harness::converge(&problem, &config.ns, &config.step, t_end, options, exec)?;
            write_convergence(out, &conv)?;
            lines.push(format!("order L2 = {:.3}, Linf = {:.3}", conv.order_l2, conv.order_linf));
        }
        Mode::Ablation => {
            let (modified, naive) = harness::ablation(&problem, &config.ns, &config.step, t_end, options, exec)?;
            write_convergence(&out.join("modified"), &modified)?;
            write_convergence(&out.join("naive"), &naive)?;
            lines.push(format!("modified order L2 = {:.3}, Linf = {:.3}", modified.order_l2, modified.order_linf));
            lines.push(format!("naive    order L2 = {:.3}, Linf = {:.3}", naive.order_l2, naive.order_linf));
        }
        Mode::Stability => {
            let rows = harness::stability_table(&problem, &config.ns, options, exec)?;
            io::write_stability_csv(&out.join("stability.csv"), &rows)?;
            for r in rows {
                lines.push(format!("N = {}: gamma_t = {:.4}, gamma_c = {:.4}, gamma_cfm = {:.4}", r.n, r.gamma_t, r.gamma_c, r.gamma_cfm));
            }
        }
    }
    Ok(lines)
}
