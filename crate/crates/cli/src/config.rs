use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

/// The pipeline a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Stationary,
    Bifurcation,
    Evolve,
    Eikonal,
    Linearize,
    Particles,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Stationary,
        Command::Bifurcation,
        Command::Evolve,
        Command::Eikonal,
        Command::Linearize,
        Command::Particles,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Stationary => "stationary",
            Command::Bifurcation => "bifurcation",
            Command::Evolve => "evolve",
            Command::Eikonal => "eikonal",
            Command::Linearize => "linearize",
            Command::Particles => "particles",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ConfigError::new(format!("unknown command `{s}`")))
    }
}

/// Every setting of one run. Fields a command does not read keep their
/// defaults and are echoed unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub beta: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub grid_n: usize,
    /// `None` lets the solver pick the horizon from the discount tail.
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    /// Keys `hjb`, `picard`, `fixed_point`, `cost`.
    pub tolerances: BTreeMap<String, f64>,
    /// Named initial condition or a CSV path; `auto` lets `particles`
    /// follow its drift source.
    pub initial_condition: String,
    /// Empty means a directory derived from the config hash.
    pub output_dir: PathBuf,
    pub seed: u64,
    pub gamma: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub steps: usize,
    pub gammas: Vec<f64>,
    /// `None` means `σ²/16`.
    pub lambda: Option<f64>,
    pub amplitude: [f64; 2],
    pub n_particles: usize,
    /// `zero`, `stationary`, `stationary:GAMMA` or `mfg_run:DIR`.
    pub drift: String,
}

pub const TOLERANCE_KEYS: [&str; 4] = ["hjb", "picard", "fixed_point", "cost"];

impl RunConfig {
    /// Defaults reproduce the reference experiments with `β = 1/2`, `σ = 1`.
    pub fn defaults(command: Command) -> Self {
        let tolerances = [("hjb", 1e-10), ("picard", 1e-7), ("fixed_point", 1e-8), ("cost", 1e-3)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let (kappa, horizon, dt, init) = match command {
            Command::Evolve => (0.8, Some(20.0), Some(1e-2), "exp_neg_sin"),
            Command::Linearize => (0.5, Some(30.0), Some(1e-2), "uniform"),
            Command::Particles => (2.0, Some(10.0), Some(1e-3), "auto"),
            _ => (2.0, None, None, "uniform"),
        };
        Self {
            command,
            beta: 0.5,
            sigma: 1.0,
            kappa,
            grid_n: 256,
            horizon,
            dt,
            tolerances,
            initial_condition: init.to_string(),
            output_dir: PathBuf::new(),
            seed: 0,
            gamma: 1.47,
            kappa_min: 0.0,
            kappa_max: 3.0,
            steps: 16,
            gammas: vec![10.0, 1e2, 1e3, 1e4],
            lambda: None,
            amplitude: [0.2, 0.1],
            n_particles: 10_000,
            drift: "stationary".to_string(),
        }
    }

    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    /// Applies one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        if let Some(name) = key.strip_prefix("tol.") {
            if !TOLERANCE_KEYS.contains(&name) {
                return Err(ConfigError::new(format!("unknown tolerance `{name}`")));
            }
            self.tolerances.insert(name.to_string(), parse(key, value)?);
            return Ok(());
        }
        match key {
            "beta" => self.beta = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "n" | "grid_n" => self.grid_n = parse(key, value)?,
            "horizon" => self.horizon = parse_auto(key, value)?,
            "dt" => self.dt = parse_auto(key, value)?,
            "init" | "initial_condition" => self.initial_condition = value.to_string(),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "kappa_min" => self.kappa_min = parse(key, value)?,
            "kappa_max" => self.kappa_max = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "gammas" => self.gammas = parse_list(key, value)?,
            "lambda" => self.lambda = parse_auto(key, value)?,
            "amplitude" => {
                let v = parse_list(key, value)?;
                self.amplitude = v
                    .try_into()
                    .map_err(|_| ConfigError::new("amplitude takes two values `gamma,eta`"))?;
            }
            "n_particles" | "particles" => self.n_particles = parse(key, value)?,
            "drift" => self.drift = value.to_string(),
            _ => return Err(ConfigError::new(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies the top-level keys of a config file and those of the section
    /// named after this command; other sections are skipped.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                name.parse::<Command>()
                    .map_err(|_| ConfigError::new(format!("line {}: unknown section [{name}]", i + 1)))?;
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(format!("line {}: expected `key = value`", i + 1)))?;
            if section.as_deref().is_none_or(|s| s == self.command.name()) {
                self.set(key.trim(), value)
                    .map_err(|e| ConfigError::new(format!("line {}: {}", i + 1, e.0)))?;
            }
        }
        Ok(())
    }

    pub fn apply_path(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
        self.apply_file(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(format!("{name} = {v} must be positive")))
            }
        };
        positive("beta", self.beta)?;
        positive("sigma", self.sigma)?;
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(ConfigError::new(format!("kappa = {} must be non-negative", self.kappa)));
        }
        if self.grid_n < 16 || !self.grid_n.is_multiple_of(2) {
            return Err(ConfigError::new(format!("n = {} must be even and >= 16", self.grid_n)));
        }
        if let Some(t) = self.horizon {
            positive("horizon", t)?;
        }
        if let Some(dt) = self.dt {
            positive("dt", dt)?;
        }
        if let Some(l) = self.lambda {
            positive("lambda", l)?;
        }
        for (k, v) in &self.tolerances {
            positive(&format!("tol.{k}"), *v)?;
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(ConfigError::new(format!("gamma = {} must be non-negative", self.gamma)));
        }
        match self.command {
            Command::Bifurcation if !(0.0 <= self.kappa_min && self.kappa_min < self.kappa_max) || self.steps == 0 => {
                Err(ConfigError::new("need 0 <= kappa_min < kappa_max and steps >= 1"))
            }
            Command::Eikonal if self.gammas.is_empty() || self.gammas.iter().any(|g| !(*g > 0.0)) => {
                Err(ConfigError::new("gammas must be a non-empty list of positive values"))
            }
            Command::Particles if self.n_particles < 100 => {
                Err(ConfigError::new(format!("n = {} particles is below the minimum of 100", self.n_particles)))
            }
            Command::Particles => self.drift_source().map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn drift_source(&self) -> Result<DriftSpec, ConfigError> {
        match self.drift.as_str() {
            "zero" => Ok(DriftSpec::Zero),
            "stationary" => Ok(DriftSpec::Stationary(None)),
            s => {
                if let Some(g) = s.strip_prefix("stationary:") {
                    Ok(DriftSpec::Stationary(Some(parse("drift", g)?)))
                } else if let Some(dir) = s.strip_prefix("mfg_run:") {
                    Ok(DriftSpec::MfgRun(PathBuf::from(dir)))
                } else {
                    Err(ConfigError::new(format!(
                        "drift `{s}` is not one of zero, stationary, stationary:GAMMA, mfg_run:DIR"
                    )))
                }
            }
        }
    }
}

/// Parsed form of [`RunConfig::drift`].
#[derive(Debug, Clone, PartialEq)]
pub enum DriftSpec {
    Zero,
    /// `None` uses the largest fixed point at the configured `κ`.
    Stationary(Option<f64>),
    /// Directory of an earlier `evolve` run.
    MfgRun(PathBuf),
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::new(format!("`{key}` cannot take the value `{value}`")))
}

fn parse_auto(key: &str, value: &str) -> Result<Option<f64>, ConfigError> {
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s.trim()))
        .collect()
}
