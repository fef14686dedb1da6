//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::fluxes::FluxSpec;
use crate::problem::{preset, BeamProblem, BoundaryType};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("bad value `{value}` for `{key}`: {reason}")]
    Value {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config: {0}")]
    Io(String),
}

pub const KEYS: &[&str] = &[
    "name",
    "problem",
    "n",
    "q",
    "s",
    "flux",
    "alpha1",
    "alpha2",
    "beta1",
    "beta2",
    "tau1",
    "tau2",
    "eta1",
    "eta2",
    "bc_left",
    "bc_right",
    "t_final",
    "cfl",
    "dt",
    "sdc_m",
    "sdc_sweeps",
    "initial",
    "samples_per_element",
    "report_times",
    "energy_stride",
];

const CUSTOM_KEYS: [&str; 6] = ["alpha1", "alpha2", "beta1", "beta2", "tau1", "tau2"];

/// Parses `key = value` lines. Blank lines and text after `#` are ignored.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .filter(|(k, v)| !k.is_empty() && !v.is_empty())
            .ok_or_else(|| ConfigError::Syntax {
                line,
                text: raw.trim().to_string(),
            })?;
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeStep {
    /// `Δt = cfl · h_min`.
    Cfl(f64),
    Fixed(f64),
}

impl TimeStep {
    pub fn for_mesh_width(self, h_min: f64) -> f64 {
        match self {
            TimeStep::Cfl(c) => c * h_min,
            TimeStep::Fixed(dt) => dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// L² projection of the preset's initial data.
    Projected,
    /// `u = v = 0`; the exact solution is dropped.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub problem: String,
    pub n: Vec<usize>,
    pub q: usize,
    pub s: usize,
    pub flux: String,
    pub flux_spec: FluxSpec,
    pub bc_left: BoundaryType,
    pub bc_right: BoundaryType,
    pub t_final: f64,
    pub time_step: TimeStep,
    pub sdc_m: usize,
    pub sdc_sweeps: usize,
    pub initial: InitialData,
    pub samples_per_element: usize,
    /// Times at which errors are reported; the final time is always included.
    pub report_times: Vec<f64>,
    pub energy_stride: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: None,
            problem: "uniform-beam".into(),
            n: vec![10, 20, 40, 80, 160],
            q: 4,
            s: 2,
            flux: "alternating".into(),
            flux_spec: FluxSpec::alternating(),
            bc_left: BoundaryType::SimplySupported,
            bc_right: BoundaryType::SimplySupported,
            t_final: 1.0,
            time_step: TimeStep::Cfl(0.5),
            sdc_m: 5,
            sdc_sweeps: 15,
            initial: InitialData::Projected,
            samples_per_element: 20,
            report_times: vec![1.0],
            energy_stride: 1,
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>().map_err(|e| ConfigError::Value {
        key: key.to_string(),
        value: raw.to_string(),
        reason: e.to_string(),
    })
}

fn list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    raw.split([',', ' '])
        .filter(|p| !p.is_empty())
        .map(|p| value(key, p))
        .collect()
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        Self::from_map(&parse_key_values(text)?)
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let get = |k: &str| map.get(k).map(String::as_str);
        let mut c = ExperimentConfig {
            name: get("name").map(str::to_string),
            ..Default::default()
        };
        if let Some(p) = get("problem") {
            c.problem = p.to_string();
        }
        let base = c.base_problem()?;
        c.bc_left = base.bc_left;
        c.bc_right = base.bc_right;
        if let Some(v) = get("n") {
            c.n = list("n", v)?;
        }
        if let Some(v) = get("q") {
            c.q = value("q", v)?;
        }
        if let Some(v) = get("s") {
            c.s = value("s", v)?;
        }

        let customs: Vec<&str> = CUSTOM_KEYS
            .iter()
            .copied()
            .filter(|k| map.contains_key(*k))
            .collect();
        if let Some(f) = get("flux") {
            c.flux = f.to_string();
        }
        c.flux_spec = if c.flux == "custom" {
            let p = |k: &str| get(k).map_or(Ok(0.0), |v| value(k, v));
            FluxSpec::custom(
                p("alpha1")?,
                p("alpha2")?,
                p("beta1")?,
                p("beta2")?,
                p("tau1")?,
                p("tau2")?,
            )
        } else {
            if let Some(k) = customs.first() {
                return Err(invalid(format!("`{k}` requires flux = custom")));
            }
            FluxSpec::preset(&c.flux).map_err(|e| ConfigError::Value {
                key: "flux".into(),
                value: c.flux.clone(),
                reason: e.to_string(),
            })?
        };
        let eta1 = get("eta1").map_or(Ok(0.0), |v| value("eta1", v))?;
        let eta2 = get("eta2").map_or(Ok(0.0), |v| value("eta2", v))?;
        c.flux_spec = c.flux_spec.with_eta(eta1, eta2);

        if let Some(v) = get("bc_left") {
            c.bc_left = value("bc_left", v)?;
        }
        if let Some(v) = get("bc_right") {
            c.bc_right = value("bc_right", v)?;
        }
        if let Some(v) = get("t_final") {
            c.t_final = value("t_final", v)?;
        }
        c.time_step = match (get("cfl"), get("dt")) {
            (Some(_), Some(_)) => return Err(invalid("give either `cfl` or `dt`, not both")),
            (Some(v), None) => TimeStep::Cfl(value("cfl", v)?),
            (None, Some(v)) => TimeStep::Fixed(value("dt", v)?),
            (None, None) => TimeStep::Cfl(0.5),
        };
        if let Some(v) = get("sdc_m") {
            c.sdc_m = value("sdc_m", v)?;
        }
        if let Some(v) = get("sdc_sweeps") {
            c.sdc_sweeps = value("sdc_sweeps", v)?;
        }
        if let Some(v) = get("initial") {
            c.initial = match v {
                "projected" => InitialData::Projected,
                "zero" => InitialData::Zero,
                _ => {
                    return Err(ConfigError::Value {
                        key: "initial".into(),
                        value: v.into(),
                        reason: "expected `projected` or `zero`".into(),
                    })
                }
            };
        }
        if let Some(v) = get("samples_per_element") {
            c.samples_per_element = value("samples_per_element", v)?;
        }
        if let Some(v) = get("energy_stride") {
            c.energy_stride = value("energy_stride", v)?;
        }
        let mut times: Vec<f64> = match get("report_times") {
            Some(v) => list("report_times", v)?,
            None => Vec::new(),
        };
        times.push(c.t_final);
        times.sort_by(f64::total_cmp);
        times.dedup();
        c.report_times = times;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.q < 2 || self.s > self.q {
            return Err(invalid(format!(
                "need q >= 2 and 0 <= s <= q, got q = {}, s = {}",
                self.q, self.s
            )));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(invalid("`n` needs at least one positive element count"));
        }
        if !self.n.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("`n` must be strictly increasing"));
        }
        self.flux_spec
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.flux_spec
            .validate_boundaries(self.bc_left, self.bc_right)
            .map_err(|e| invalid(e.to_string()))?;
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(invalid(format!(
                "t_final = {} must be finite and nonnegative",
                self.t_final
            )));
        }
        let step = match self.time_step {
            TimeStep::Cfl(c) | TimeStep::Fixed(c) => c,
        };
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid(format!(
                "time step parameter {step} must be positive"
            )));
        }
        if self.sdc_m == 0 {
            return Err(invalid("sdc_m must be at least 1"));
        }
        if self.samples_per_element == 0 || self.energy_stride == 0 {
            return Err(invalid(
                "samples_per_element and energy_stride must be positive",
            ));
        }
        if self
            .report_times
            .iter()
            .any(|&t| !(0.0..=self.t_final).contains(&t))
        {
            return Err(invalid("report_times must lie in [0, t_final]"));
        }
        self.base_problem()?;
        Ok(())
    }

    fn base_problem(&self) -> Result<BeamProblem, ConfigError> {
        preset(&self.problem).map_err(|e| ConfigError::Value {
            key: "problem".into(),
            value: self.problem.clone(),
            reason: e.to_string(),
        })
    }

    /// The preset with the configured end conditions and initial data.
    pub fn problem(&self) -> Result<BeamProblem, ConfigError> {
        let mut p = self
            .base_problem()?
            .with_boundaries(self.bc_left, self.bc_right);
        if self.initial == InitialData::Zero {
            p.g1 = std::sync::Arc::new(|_| 0.0);
            p.g2 = std::sync::Arc::new(|_| 0.0);
            p.exact = None;
        }
        Ok(p)
    }

    /// Output file stem: `name`, or the given default.
    pub fn stem<'a>(&'a self, default: &'a str) -> &'a str {
        self.name.as_deref().unwrap_or(default)
    }
}
