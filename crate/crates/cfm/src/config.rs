//! Run configuration: defaults, `key = value` files and validation.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cfm_core::march::CorrectionMode;
use cfm_core::SolveMethod;
use cfm_core::problems::{problem_em_shielding, ProblemId, ProblemSpec};
use cfm_core::regions::{DEFAULT_L_FACTOR, L_FACTOR_RANGE};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("invalid value `{value}` for `{key}`")]
    Value { key: String, value: String },
    #[error("invalid dt rule `{0}`: use products/quotients of numbers, `dx` and `c`")]
    DtRule(String),
    #[error("{0}")]
    Range(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Converge,
    Stability,
    Ablation,
}

impl FromStr for Mode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "run" => Ok(Mode::Run),
            "converge" => Ok(Mode::Converge),
            "stability" => Ok(Mode::Stability),
            "ablation" => Ok(Mode::Ablation),
            _ => Err(()),
        }
    }
}

/// `Δt` as an expression in `dx` and `c`, e.g. `0.75*dx/c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DtExpr {
    text: String,
    factors: Vec<(bool, Factor)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Factor {
    Number(f64),
    Dx,
    C,
}

impl DtExpr {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let err = || ConfigError::DtRule(text.to_string());
        let mut factors = Vec::new();
        let mut divide = false;
        let mut rest = text.trim();
        loop {
            let end = rest.find(['*', '/']).unwrap_or(rest.len());
            let token = rest[..end].trim();
            let factor = match token {
                "dx" => Factor::Dx,
                "c" => Factor::C,
                _ => Factor::Number(token.parse().map_err(|_| err())?),
            };
            factors.push((divide, factor));
            if end == rest.len() {
                break;
            }
            divide = rest.as_bytes()[end] == b'/';
            rest = &rest[end + 1..];
        }
        Ok(DtExpr { text: text.trim().to_string(), factors })
    }

    pub fn eval(&self, dx: f64, c: f64) -> f64 {
        self.factors.iter().fold(1.0, |acc, &(divide, f)| {
            let v = match f {
                Factor::Number(x) => x,
                Factor::Dx => dx,
                Factor::C => c,
            };
            if divide {
                acc / v
            } else {
                acc * v
            }
        })
    }
}

impl fmt::Display for DtExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepRule {
    /// The problem's own default ratio.
    Default,
    /// `Δt = γ Δx`.
    Gamma(f64),
    Expr(DtExpr),
}

impl StepRule {
    pub fn dt(&self, problem: &ProblemSpec, dx: f64) -> f64 {
        match self {
            StepRule::Default => problem.default_gamma * dx,
            StepRule::Gamma(g) => g * dx,
            StepRule::Expr(e) => e.eval(dx, problem.c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub problem: ProblemId,
    pub ns: Vec<usize>,
    pub step: StepRule,
    pub l_factor: f64,
    pub c1: f64,
    pub c2: f64,
    /// Defaults to one period of the problem.
    pub t_end: Option<f64>,
    /// Wave speed override (only meaningful for `em-shield`).
    pub speed: Option<f64>,
    pub stepper: CorrectionMode,
    pub solver: SolveMethod,
    pub calibrate: bool,
    /// Write a field snapshot every k steps; 0 keeps only the final state.
    pub snapshot_every: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Run,
            problem: ProblemId::Line1d,
            ns: vec![50, 100, 200],
            step: StepRule::Default,
            l_factor: DEFAULT_L_FACTOR,
            c1: 1.0,
            c2: 1.0,
            t_end: None,
            speed: None,
            stepper: CorrectionMode::Modified,
            solver: SolveMethod::NormalEquations,
            calibrate: false,
            snapshot_every: 0,
            out: PathBuf::from("out"),
        }
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, ConfigError> {
    value
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| ConfigError::Value { key: key.into(), value: value.into() }))
        .collect()
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Value { key: key.into(), value: value.into() })
}

impl RunConfig {
    /// Applies one `key = value` setting. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let bad = || ConfigError::Value { key: key.into(), value: value.into() };
        match key.trim().replace('-', "_").as_str() {
            "mode" => self.mode = value.parse().map_err(|_| bad())?,
            "problem" => self.problem = value.parse().map_err(|_| bad())?,
            "n" => self.ns = parse_list(key, value)?,
            "gamma" => self.step = StepRule::Gamma(parse(key, value)?),
            "dt_rule" => self.step = StepRule::Expr(DtExpr::parse(value)?),
            "l_factor" => self.l_factor = parse(key, value)?,
            "c1" => self.c1 = parse(key, value)?,
            "c2" => self.c2 = parse(key, value)?,
            "t_end" => self.t_end = Some(parse(key, value)?),
            "c" | "speed" => self.speed = Some(parse(key, value)?),
            "stepper" => {
                self.stepper = match value {
                    "modified" => CorrectionMode::Modified,
                    "naive" => CorrectionMode::Naive,
                    _ => return Err(bad()),
                }
            }
            "solver" => {
                self.solver = match value {
                    "normal" => SolveMethod::NormalEquations,
                    "qr" => SolveMethod::Qr,
                    _ => return Err(bad()),
                }
            }
            "calibrate" => self.calibrate = parse(key, value)?,
            "snapshot_every" => self.snapshot_every = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Parses a plain-text file of `key = value` lines; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_str_config(text: &str) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        c.apply_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        match (self.problem, self.speed) {
            (ProblemId::EmShield, Some(c)) => problem_em_shielding(c),
            (id, _) => ProblemSpec::by_id(id),
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t_end.unwrap_or_else(|| self.problem_spec().period)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |msg: String| Err(ConfigError::Range(msg));
        if !(L_FACTOR_RANGE.0..=L_FACTOR_RANGE.1).contains(&self.l_factor) {
            return range(format!("l-factor {} outside [{}, {}]", self.l_factor, L_FACTOR_RANGE.0, L_FACTOR_RANGE.1));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return range(format!("c1 and c2 must be positive, got {} and {}", self.c1, self.c2));
        }
        if self.ns.is_empty() || self.ns.iter().any(|&n| n < 5) {
            return range(format!("every N must be at least 5, got {:?}", self.ns));
        }
        if matches!(self.mode, Mode::Converge | Mode::Ablation) && self.ns.len() < 3 {
            return range(format!("need at least 3 grid levels, got {}", self.ns.len()));
        }
        if let Some(t) = self.t_end {
            if !(t >= 0.0 && t.is_finite()) {
                return range(format!("t-end must be non-negative, got {t}"));
            }
        }
        if let Some(c) = self.speed {
            if !(c > 0.0 && c.is_finite()) {
                return range(format!("wave speed must be positive, got {c}"));
            }
        }
        let problem = self.problem_spec();
        let dx = (problem.upper - problem.lower) / self.ns[0] as f64;
        let dt = self.step.dt(&problem, dx);
        if !(dt > 0.0 && dt.is_finite()) {
            return range(format!("time step rule gives Δt = {dt}"));
        }
        Ok(())
    }
}
