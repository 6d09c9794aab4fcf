//! Strict flat-file run configuration.
//!
//! The format is one `key = value` pair per line, `#` comments, no nesting.
//! Every key is optional and falls back to the desk-scale default below;
//! unknown or duplicated keys are errors so a typo cannot silently run the
//! wrong experiment.

use choquard_mfg::{GridSpec, MFGParams, SolveConfig};
use serde::Serialize;
use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// What the run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One coupled solve at the configured mollification radius.
    Solve,
    /// Solves along the whole `epsilon_schedule`.
    Continuation,
    /// Concentration-family scaling sweep.
    Scaling,
    /// Coupling-strength sweep.
    Threshold,
    /// Full property suite.
    Verify,
}

impl FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "solve" => Ok(Mode::Solve),
            "continuation" => Ok(Mode::Continuation),
            "scaling" => Ok(Mode::Scaling),
            "threshold" => Ok(Mode::Threshold),
            "verify" => Ok(Mode::Verify),
            other => Err(ConfigError(format!(
                "mode: expected one of solve|continuation|scaling|threshold|verify, got '{other}'"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Solve => "solve",
            Mode::Continuation => "continuation",
            Mode::Scaling => "scaling",
            Mode::Threshold => "threshold",
            Mode::Verify => "verify",
        };
        f.write_str(s)
    }
}

/// Config-level failure; always carries the offending key or line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Fully resolved run description, echoed verbatim into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub dim: usize,
    pub cells_per_axis: usize,
    pub gamma: f64,
    pub c_h: f64,
    pub c_f: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub tol: f64,
    pub max_outer_iterations: usize,
    pub epsilon_schedule: Vec<f64>,
    pub ball_radius: Option<f64>,
    pub rng_seed: u64,
    /// Widths for `mode = scaling`.
    pub sigma_list: Vec<f64>,
    /// Coupling strengths for `mode = threshold`.
    pub c_f_grid: Vec<f64>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Solve,
            dim: 1,
            cells_per_axis: 128,
            gamma: 2.0,
            c_h: 1.0,
            c_f: 0.1,
            alpha: 0.5,
            epsilon: 0.0,
            tau: 0.5,
            tol: 1e-9,
            max_outer_iterations: 500,
            epsilon_schedule: vec![0.25, 0.125, 0.0625, 0.0],
            ball_radius: None,
            rng_seed: 0,
            sigma_list: vec![0.04, 0.05, 0.0625, 0.08, 0.1, 0.12],
            c_f_grid: vec![0.0, 0.05, 0.1, 0.15, 0.2],
            output_dir: PathBuf::from("."),
        }
    }
}

fn parse_scalar<T: FromStr>(key: &str, raw: &str, expected: &str) -> Result<T, ConfigError> {
    raw.parse()
        .map_err(|_| ConfigError(format!("{key}: cannot parse '{raw}' as {expected}")))
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|piece| !piece.is_empty())
        .map(|piece| parse_scalar::<f64>(key, piece, "a number"))
        .collect()
}

impl RunConfig {
    /// Parses the strict `key = value` format. Unknown and repeated keys
    /// are rejected by name.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut config = RunConfig::default();
        let mut seen = HashSet::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(ConfigError(format!(
                    "line {}: duplicate key '{key}'",
                    lineno + 1
                )));
            }
            match key {
                "mode" => config.mode = value.parse()?,
                "dim" => config.dim = parse_scalar(key, value, "an integer")?,
                "cells_per_axis" => {
                    config.cells_per_axis = parse_scalar(key, value, "an integer")?
                }
                "gamma" => config.gamma = parse_scalar(key, value, "a number")?,
                "c_h" => config.c_h = parse_scalar(key, value, "a number")?,
                "c_f" => config.c_f = parse_scalar(key, value, "a number")?,
                "alpha" => config.alpha = parse_scalar(key, value, "a number")?,
                "epsilon" => config.epsilon = parse_scalar(key, value, "a number")?,
                "tau" => config.tau = parse_scalar(key, value, "a number")?,
                "tol" => config.tol = parse_scalar(key, value, "a number")?,
                "max_outer_iterations" => {
                    config.max_outer_iterations = parse_scalar(key, value, "an integer")?
                }
                "epsilon_schedule" => config.epsilon_schedule = parse_list(key, value)?,
                "ball_radius" => {
                    config.ball_radius = if value == "none" {
                        None
                    } else {
                        Some(parse_scalar(key, value, "a number or 'none'")?)
                    }
                }
                "rng_seed" => config.rng_seed = parse_scalar(key, value, "an integer")?,
                "sigma_list" => config.sigma_list = parse_list(key, value)?,
                "c_f_grid" => config.c_f_grid = parse_list(key, value)?,
                "output_dir" => config.output_dir = PathBuf::from(value),
                other => {
                    return Err(ConfigError(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(config)
    }

    /// Validates against the owning modules and returns the typed pieces a
    /// run needs.
    pub fn build(&self) -> Result<(GridSpec, MFGParams<f64>, SolveConfig<f64>), ConfigError> {
        let spec = GridSpec::new(self.dim, self.cells_per_axis)
            .map_err(|e| ConfigError(e.to_string()))?;
        let params = MFGParams::new(
            self.dim,
            self.gamma,
            self.c_h,
            self.c_f,
            self.alpha,
            self.epsilon,
        )
        .map_err(|e| ConfigError(e.to_string()))?;
        let solve = SolveConfig {
            tau: self.tau,
            tol: self.tol,
            max_outer_iterations: self.max_outer_iterations,
            epsilon_schedule: self.epsilon_schedule.clone(),
            ball_radius: self.ball_radius,
            rng_seed: self.rng_seed,
        };
        solve
            .validate(spec.spacing::<f64>())
            .map_err(|e| ConfigError(e.to_string()))?;
        Ok((spec, params, solve))
    }
}
