//! Experiment configuration, schema `linrate-experiment/1`.

use std::collections::BTreeMap;
use std::path::Path;

use linrate::generators::model_zoo;
use linrate::Model;
use serde::{Deserialize, Serialize};

use crate::solvers::{allowed_options, available};
use crate::{BenchError, Result};

pub const EXPERIMENT_SCHEMA: &str = "linrate-experiment/1";
pub const DEFAULT_WINDOW_CAP: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Transient,
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// Window cap; the `N` model parameter for hybrid models.
    N,
    /// Count cap of a telegraph model.
    M,
    /// Strang step count.
    #[serde(rename = "K_s")]
    Ks,
    #[serde(rename = "eps")]
    Eps,
    #[serde(rename = "n_T")]
    NT,
    /// Species count of `predator_prey_K`.
    K,
}

impl Axis {
    fn is_integer(self) -> bool {
        !matches!(self, Axis::Eps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerName {
    #[default]
    Auto,
    Rosenbrock,
    Uniformization,
    DenseExpm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub name: String,
    /// Distinguishes two entries of the same solver; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub options: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<InnerName>,
}

impl SolverSpec {
    pub fn named(name: &str) -> Self {
        Self { name: name.to_string(), label: None, options: BTreeMap::new(), inner: None }
    }

    pub fn with_option(mut self, key: &str, value: f64) -> Self {
        self.options.insert(key.to_string(), value);
        self
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelfKeyword {
    #[serde(rename = "self")]
    SelfRef,
}

/// `"self"` scores each solver against its own output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reference {
    Keyword(SelfKeyword),
    Solver(SolverSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub name: String,
    pub model: ModelSpec,
    #[serde(default)]
    pub mode: Mode,
    /// Final time; required for transient runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Window cap for linear and telegraph models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    /// Initial state: `[n]`, `[n_0, .., n_{K−1}]` or `[hidden, count]`; zeros by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<usize>>,
    pub sweep: Sweep,
    pub solvers: Vec<SolverSpec>,
    pub reference: Reference,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Timed runs are serialized; untimed sweep points may run in parallel.
    #[serde(default = "default_timing")]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_schema() -> String {
    EXPERIMENT_SCHEMA.to_string()
}

fn default_repetitions() -> usize {
    3
}

fn default_timing() -> bool {
    true
}

/// One sweep point, fully resolved.
#[derive(Debug, Clone)]
pub struct Point {
    pub value: f64,
    pub name: String,
    pub model: Model,
    pub mode: Mode,
    pub cap: usize,
    pub t: f64,
    pub initial: Vec<usize>,
    pub k_s: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| BenchError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// `fig_data_<name>.json` unless `output` names a file.
    pub fn output_file_name(&self) -> String {
        self.output.clone().unwrap_or_else(|| format!("fig_data_{}.json", self.name))
    }

    pub fn sweep_axis_name(&self) -> &'static str {
        match self.sweep.axis {
            Axis::N => "N",
            Axis::M => "M",
            Axis::Ks => "K_s",
            Axis::Eps => "eps",
            Axis::NT => "n_T",
            Axis::K => "K",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.schema != EXPERIMENT_SCHEMA {
            return bad(format!("unsupported schema `{}`", self.schema));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("name `{}` must be a non-empty file stem", self.name));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        let values = &self.sweep.values;
        if values.is_empty() {
            return bad("sweep needs at least one value".into());
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sweep values must be strictly increasing".into());
        }
        for &v in values {
            if !v.is_finite() || v < 0.0 || (self.sweep.axis.is_integer() && (v.fract() != 0.0 || v < 1.0)) {
                return bad(format!("sweep value {v} is invalid for axis {:?}", self.sweep.axis));
            }
        }
        if self.mode == Mode::Transient && !self.t.is_some_and(|t| t.is_finite() && t >= 0.0) {
            return bad("transient runs need a finite t ≥ 0".into());
        }
        if self.cap == Some(0) {
            return bad("cap must be at least 1".into());
        }
        if self.solvers.is_empty() {
            return bad("no solvers listed".into());
        }
        let kind = self.point(values[0])?.model.kind();
        let catalog = available(kind, self.mode);
        let mut labels: Vec<&str> = Vec::new();
        let reference = match &self.reference {
            Reference::Solver(s) => Some(s),
            Reference::Keyword(_) => None,
        };
        for s in self.solvers.iter().chain(reference) {
            if !catalog.contains(&s.name.as_str()) {
                return bad(format!(
                    "solver `{}` is not available for {kind} models in {:?} mode (have {catalog:?})",
                    s.name, self.mode
                ));
            }
            let allowed = allowed_options(&s.name);
            if let Some(k) = s.options.keys().find(|k| !allowed.contains(&k.as_str())) {
                return bad(format!("solver `{}` has no option `{k}` (allowed {allowed:?})", s.name));
            }
        }
        for s in &self.solvers {
            if labels.contains(&s.label()) {
                return bad(format!("duplicate solver label `{}`", s.label()));
            }
            labels.push(s.label());
        }
        Ok(())
    }

    /// Model, window and overrides at sweep value `value`.
    pub fn point(&self, value: f64) -> Result<Point> {
        let mut params = self.model.params.clone();
        let base = model_zoo(&self.model.name, &params)?;
        let hybrid = matches!(base, Model::Hybrid(_));
        let mut cap = self.cap.unwrap_or(DEFAULT_WINDOW_CAP);
        let mut k_s = None;
        match self.sweep.axis {
            Axis::N if hybrid => {
                params.insert("N".into(), value);
            }
            Axis::N | Axis::M => cap = value as usize,
            Axis::Ks => k_s = Some(value as usize),
            Axis::Eps => {
                params.insert("eps".into(), value);
            }
            Axis::NT => {
                params.insert("n_T".into(), value);
            }
            Axis::K => {
                params.insert("K".into(), value);
            }
        }
        let model = if params == self.model.params { base } else { model_zoo(&self.model.name, &params)? };
        let (cap, dims) = match &model {
            Model::Hybrid(h) => (h.cap(), h.species()),
            Model::Telegraph(_) => (cap, 2),
            Model::Linear(_) => (cap, 1),
        };
        let initial = self.initial.clone().unwrap_or_else(|| vec![0; dims]);
        if initial.len() != dims {
            return Err(BenchError::Config(format!("initial state needs {dims} entries, got {}", initial.len())));
        }
        Ok(Point {
            value,
            name: self.model.name.clone(),
            model,
            mode: self.mode,
            cap,
            t: self.t.unwrap_or(0.0),
            initial,
            k_s,
        })
    }
}
