use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cfm::config::{DtExpr, Mode, RunConfig, StepRule};
use cfm::Rayon;

#[derive(Parser)]
#[command(name = "cfm", version, about = "Correction function method for the wave equation with interface jumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single runs; writes errors, snapshots, tiling and solve diagnostics.
    Run(Opts),
    /// Convergence ladder; writes errors.csv and order.json.
    Converge(Opts),
    /// Stability bisection; writes stability.csv.
    Stability(Opts),
    /// Modified vs naive stage corrections.
    Ablation(Opts),
}

#[derive(Args)]
struct Opts {
    /// key = value configuration file, applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// line1d, circle, star, osculating or em-shield.
    #[arg(long)]
    problem: Option<String>,
    /// Grid sizes per axis, comma separated.
    #[arg(long)]
    n: Option<String>,
    /// Δt/Δx.
    #[arg(long, conflicts_with = "dt_rule")]
    gamma: Option<f64>,
    /// Δt expression in dx and c, e.g. 0.75*dx/c.
    #[arg(long)]
    dt_rule: Option<String>,
    #[arg(long)]
    l_factor: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Wave speed override (em-shield only; 1 gives the nondimensional variant).
    #[arg(long)]
    c: Option<f64>,
    /// modified or naive.
    #[arg(long)]
    stepper: Option<String>,
    /// normal (Cholesky of the normal equations) or qr.
    #[arg(long)]
    solver: Option<String>,
    /// Sweep c1, c2 over {1e-2, 1, 1e2} on the first grid before the main job.
    #[arg(long)]
    calibrate: bool,
    /// Snapshot interval in steps for `run` (0: final state only).
    #[arg(long)]
    snapshot_every: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(mode: Mode, o: Opts) -> Result<RunConfig, String> {
    let mut c = RunConfig { mode, ..RunConfig::default() };
    if let Some(path) = &o.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        c.apply_str(&text).map_err(|e| e.to_string())?;
        c.mode = mode;
    }
    let mut set = |k: &str, v: Option<String>| -> Result<(), String> {
        match v {
            Some(v) => c.set(k, &v).map_err(|e| e.to_string()),
            None => Ok(()),
        }
    };
    set("problem", o.problem)?;
    set("n", o.n)?;
    set("l_factor", o.l_factor.map(|v| v.to_string()))?;
    set("c1", o.c1.map(|v| v.to_string()))?;
    set("c2", o.c2.map(|v| v.to_string()))?;
    set("t_end", o.t_end.map(|v| v.to_string()))?;
    set("c", o.c.map(|v| v.to_string()))?;
    set("stepper", o.stepper)?;
    set("solver", o.solver)?;
    set("snapshot_every", o.snapshot_every.map(|v| v.to_string()))?;
    if let Some(g) = o.gamma {
        c.step = StepRule::Gamma(g);
    }
    if let Some(e) = &o.dt_rule {
        c.step = StepRule::Expr(DtExpr::parse(e).map_err(|e| e.to_string())?);
    }
    if o.calibrate {
        c.calibrate = true;
    }
    if let Some(out) = o.out {
        c.out = out;
    }
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, opts) = match cli.command {
        Command::Run(o) => (Mode::Run, o),
        Command::Converge(o) => (Mode::Converge, o),
        Command::Stability(o) => (Mode::Stability, o),
        Command::Ablation(o) => (Mode::Ablation, o),
    };
    let config = match build_config(mode, opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match cfm::app::execute(&config, &Rayon) {
        Ok(lines) => {
            let mut out = std::io::stdout().lock();
            // A closed pipe (e.g. `| head`) is not an error.
            for l in lines {
                let _ = writeln!(out, "{l}");
            }
            let _ = writeln!(out, "outputs written to {}", config.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
