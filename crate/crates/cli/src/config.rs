use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sinrlab::analysis::Normalization;
use sinrlab::sim::TrafficMode;
use sinrlab::{build_params, RawParams, SystemParams};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Solve,
    Simulate,
    Meta,
    Stability,
    Sweep,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    ThetaDb,
    Xi,
    Lambda,
    R,
}

impl Axis {
    pub fn apply(self, raw: &mut RawParams, v: f64) {
        match self {
            Axis::ThetaDb => raw.theta_db = v,
            Axis::Xi => raw.xi = v,
            Axis::Lambda => raw.lambda = v,
            Axis::R => raw.r = v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: Axis,
    /// explicit values
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// [first, last, count], evenly spaced
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linspace: Option<[f64; 3]>,
    /// [first, last, count], evenly spaced in log scale
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logspace: Option<[f64; 3]>,
}

impl Sweep {
    pub fn resolve(&self) -> Result<Vec<f64>, CliError> {
        let spaced = |s: &[f64; 3], log: bool| -> Result<Vec<f64>, CliError> {
            let n = s[2];
            if !(n >= 1.0 && n.fract() == 0.0) {
                return Err(CliError::Config(format!("sweep count {n} is not a positive integer")));
            }
            let n = n as usize;
            let (a, b) = if log {
                if !(s[0] > 0.0 && s[1] > 0.0) {
                    return Err(CliError::Config("logspace ends must be positive".into()));
                }
                (s[0].ln(), s[1].ln())
            } else {
                (s[0], s[1])
            };
            Ok((0..n)
                .map(|i| {
                    let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    let x = a + t * (b - a);
                    if log {
                        x.exp()
                    } else {
                        x
                    }
                })
                .collect())
        };
        let values = match (&self.values, &self.linspace, &self.logspace) {
            (Some(v), None, None) => v.clone(),
            (None, Some(s), None) => spaced(s, false)?,
            (None, None, Some(s)) => spaced(s, true)?,
            _ => return Err(CliError::Config("sweep needs exactly one of values, linspace, logspace".into())),
        };
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("sweep values must be finite and non-empty".into()));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimKnobs {
    pub slots: u64,
    pub warmup: u64,
    pub realizations: usize,
    pub seed: u64,
    pub mode: TrafficMode,
    /// side of the square torus (m)
    pub side: f64,
}

impl Default for SimKnobs {
    fn default() -> Self {
        Self { slots: 10_000, warmup: 1_000, realizations: 20, seed: 1, mode: TrafficMode::Queued, side: 1000.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetaKnobs {
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub normalization: Normalization,
    /// also fit the moment-matched Beta law
    pub beta: bool,
    /// also build the empirical curve from simulation
    pub simulate: bool,
}

impl Default for MetaKnobs {
    fn default() -> Self {
        Self {
            grid: 201,
            tol: 1e-3,
            max_iter: 30,
            normalization: Normalization::PlaneIntegral,
            beta: true,
            simulate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityKnobs {
    pub epsilons: Vec<f64>,
}

impl Default for StabilityKnobs {
    fn default() -> Self {
        Self { epsilons: (1..=10).map(|i| 0.05 * i as f64).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 1 km² torus, λ = 10⁻⁴ m⁻², r = 25 m, α = 3.8, θ = 0 dB, ξ = 0.1,
    /// 17 dBm transmit power, −90 dBm noise
    #[default]
    Defaults,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    pub preset: Preset,
    /// overrides of the preset, in dB at this boundary
    pub params: RawParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    /// outer axis, one full sweep per value
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<Sweep>,
    pub sim: SimKnobs,
    pub meta: MetaKnobs,
    pub stability: StabilityKnobs,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: None,
            preset: Preset::Defaults,
            params: RawParams::DEFAULT,
            sweep: None,
            series: None,
            sim: SimKnobs::default(),
            meta: MetaKnobs::default(),
            stability: StabilityKnobs::default(),
            out: None,
            jobs: None,
        }
    }
}

/// One parameter set of a sweep.
#[derive(Debug, Clone)]
pub struct Point {
    pub raw: RawParams,
    pub params: SystemParams,
}

impl ExperimentConfig {
    pub fn points(&self) -> Result<Vec<Point>, CliError> {
        let outer: Vec<Option<(Axis, f64)>> = match &self.series {
            Some(s) => s.resolve()?.into_iter().map(|v| Some((s.axis, v))).collect(),
            None => vec![None],
        };
        let inner: Vec<Option<(Axis, f64)>> = match &self.sweep {
            Some(s) => s.resolve()?.into_iter().map(|v| Some((s.axis, v))).collect(),
            None => vec![None],
        };
        let mut points = Vec::with_capacity(outer.len() * inner.len());
        for o in &outer {
            for i in &inner {
                let mut raw = self.params;
                for (axis, v) in o.iter().chain(i.iter()) {
                    axis.apply(&mut raw, *v);
                }
                let params = build_params(&raw).map_err(|e| CliError::Config(e.to_string()))?;
                points.push(Point { raw, params });
            }
        }
        Ok(points)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.sim.slots <= self.sim.warmup {
            return Err(CliError::Config(format!(
                "sim.slots ({}) must exceed sim.warmup ({})",
                self.sim.slots, self.sim.warmup
            )));
        }
        if self.sim.realizations == 0 {
            return Err(CliError::Config("sim.realizations must be positive".into()));
        }
        if !(self.sim.side > 0.0 && self.sim.side.is_finite()) {
            return Err(CliError::Config("sim.side must be positive".into()));
        }
        if self.stability.epsilons.iter().any(|e| !(0.0..=1.0).contains(e)) || self.stability.epsilons.is_empty() {
            return Err(CliError::Config("stability.epsilons must be non-empty and within [0, 1]".into()));
        }
        if self.meta.grid < 21 {
            return Err(CliError::Config("meta.grid must be at least 21".into()));
        }
        if self.jobs == Some(0) {
            return Err(CliError::Config("jobs must be positive".into()));
        }
        self.points().map(|_| ())
    }
}

/// Read a JSON or TOML file into a generic tree. A manifest written by a
/// previous run yields the configuration it recorded.
pub fn load_tree(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let tree: Value = if is_toml {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    };
    match tree {
        Value::Object(mut m) if m.get("tool").and_then(Value::as_str) == Some("sinrlab") && m.contains_key("config") => {
            Ok(m.remove("config").unwrap())
        }
        Value::Object(_) => Ok(tree),
        _ => Err(CliError::Config(format!("{}: top level must be a table", path.display()))),
    }
}

/// Apply `a.b.c=value`; the value is read as JSON when it parses, else as a string.
pub fn apply_set(tree: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{assignment}`")))?;
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad key `{key}`")));
    }
    let mut node = tree;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("`{key}` descends into a non-table")))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| CliError::Config(format!("`{key}` descends into a non-table")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

pub fn from_tree(tree: Value) -> Result<ExperimentConfig, CliError> {
    serde_json::from_value(tree).map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_creates_nested_keys() {
        let mut t = Value::Object(Default::default());
        apply_set(&mut t, "params.theta_db=5").unwrap();
        apply_set(&mut t, "sweep.axis=xi").unwrap();
        apply_set(&mut t, "sweep.values=[0.1, 0.2]").unwrap();
        let cfg = from_tree(t).unwrap();
        assert_eq!(cfg.params.theta_db, 5.0);
        assert_eq!(cfg.sweep.unwrap().resolve().unwrap(), vec![0.1, 0.2]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut t = Value::Object(Default::default());
        apply_set(&mut t, "params.thetadb=5").unwrap();
        assert!(from_tree(t).is_err());
        assert!(apply_set(&mut Value::Object(Default::default()), "novalue").is_err());
    }

    #[test]
    fn spacing() {
        let s = Sweep { axis: Axis::Lambda, values: None, linspace: None, logspace: Some([1e-6, 1e-2, 5.0]) };
        let v = s.resolve().unwrap();
        assert_eq!(v.len(), 5);
        assert!((v[2] - 1e-4).abs() < 1e-16);
        let s = Sweep { axis: Axis::ThetaDb, values: None, linspace: Some([-10.0, 10.0, 5.0]), logspace: None };
        assert_eq!(s.resolve().unwrap(), vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
        let both = Sweep { axis: Axis::Xi, values: Some(vec![0.1]), linspace: Some([0.0, 1.0, 2.0]), logspace: None };
        assert!(both.resolve().is_err());
    }

    #[test]
    fn out_of_domain_sweep_is_a_config_error() {
        let cfg = ExperimentConfig {
            sweep: Some(Sweep { axis: Axis::Xi, values: Some(vec![0.5, 1.5]), linspace: None, logspace: None }),
            ..ExperimentConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn series_times_sweep() {
        let cfg = ExperimentConfig {
            series: Some(Sweep { axis: Axis::Xi, values: Some(vec![0.1, 0.3]), linspace: None, logspace: None }),
            sweep: Some(Sweep { axis: Axis::ThetaDb, values: Some(vec![-5.0, 0.0, 5.0]), linspace: None, logspace: None }),
            ..ExperimentConfig::default()
        };
        let pts = cfg.points().unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!((pts[4].raw.xi, pts[4].raw.theta_db), (0.3, 0.0));
    }
}
