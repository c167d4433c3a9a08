//! Named models with default parameters.
//!
//! | name              | kind      | parameters (defaults)                                           |
//! |-------------------|-----------|-----------------------------------------------------------------|
//! | `binary_bd`       | linear    | `lambda` 1.05, `mu` 1                                           |
//! | `bdi`             | linear    | `lambda` 0.9, `mu` 1, `nu` 2                                    |
//! | `mm_inf`          | linear    | `nu` 2, `mu` 1                                                  |
//! | `signed_mm_inf`   | linear    | `nu` −1, `mu` 1, `alpha0` −mu, `beta0` −nu (diagonal verbatim)  |
//! | `schlogl`         | hybrid    | `V` 25, `k1` 3, `km1` 0.6, `k2` 0.25, `km2` 2.95, `N` 200       |
//! | `coag_branching`  | hybrid    | `lambda` 0.9, `mu` 1, `nu` 2, `eps` 1e−3, `N` 120               |
//! | `predator_prey_K` | hybrid    | `K` 2, `N` 8, `gamma` 0.1, `nu`/`mu` or `nu_i`/`mu_i`           |
//! | `telegraph_gr`    | telegraph | `n_T` 6, `k_on` 0.35, `k_off` 0.55, `k_chain` 6, `mu` 1         |
//!
//! `predator_prey_K` with `K = 2` defaults to `nu_0 = 10, mu_0 = 1, nu_1 = 0.5,
//! mu_1 = 1` and has the single predation `X_0 + X_1 → 2 X_1`. For `K ≥ 3` the
//! predation is cyclic, `X_i + X_{i+1 mod K} → 2 X_{i+1 mod K}`, with defaults
//! `nu = 2, mu = 1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{HybridModel, LinearRateGenerator, MatrixTelegraphModel, SparseOperator};
use crate::error::{Error, Result};
use crate::series::{strides, unflatten};

pub const ZOO_NAMES: [&str; 8] =
    ["binary_bd", "bdi", "mm_inf", "schlogl", "predator_prey_K", "telegraph_gr", "coag_branching", "signed_mm_inf"];

pub const MODEL_CONFIG_SCHEMA: &str = "linrate-model/1";

#[derive(Debug, Clone)]
pub enum Model {
    Linear(LinearRateGenerator),
    Hybrid(HybridModel),
    Telegraph(MatrixTelegraphModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Linear(_) => "linear",
            Model::Hybrid(_) => "hybrid",
            Model::Telegraph(_) => "telegraph",
        }
    }
}

/// Flat model document: `{"schema": "linrate-model/1", "model": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub model: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

fn default_schema() -> String {
    MODEL_CONFIG_SCHEMA.to_string()
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema != MODEL_CONFIG_SCHEMA {
            return Err(Error::Config(format!("unsupported schema `{}`", cfg.schema)));
        }
        Ok(cfg)
    }

    pub fn build(&self) -> Result<Model> {
        model_zoo(&self.model, &self.params)
    }
}

struct Params<'a> {
    map: &'a BTreeMap<String, f64>,
    used: Vec<String>,
}

impl<'a> Params<'a> {
    fn new(map: &'a BTreeMap<String, f64>) -> Self {
        Self { map, used: Vec::new() }
    }

    fn get(&mut self, key: &str, default: f64) -> Result<f64> {
        self.used.push(key.to_string());
        let v = self.map.get(key).copied().unwrap_or(default);
        if !v.is_finite() {
            return Err(Error::param(key, "must be finite"));
        }
        Ok(v)
    }

    fn nonneg(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default)?;
        if v < 0.0 {
            return Err(Error::param(key, "must be nonnegative"));
        }
        Ok(v)
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default)?;
        if v <= 0.0 {
            return Err(Error::param(key, "must be positive"));
        }
        Ok(v)
    }

    fn count(&mut self, key: &str, default: usize, min: usize) -> Result<usize> {
        let v = self.get(key, default as f64)?;
        if v.fract() != 0.0 || v < min as f64 {
            return Err(Error::param(key, format!("must be an integer ≥ {min}")));
        }
        Ok(v as usize)
    }

    fn finish(self) -> Result<()> {
        for key in self.map.keys() {
            if !self.used.iter().any(|u| u == key) {
                return Err(Error::param(key, "unknown parameter for this model"));
            }
        }
        Ok(())
    }
}

pub fn model_zoo(name: &str, params: &BTreeMap<String, f64>) -> Result<Model> {
    let mut p = Params::new(params);
    let model = match name {
        "binary_bd" => {
            let lambda = p.nonneg("lambda", 1.05)?;
            let mu = p.nonneg("mu", 1.0)?;
            Model::Linear(LinearRateGenerator::markov(&[(1, lambda, 0.0), (-1, mu, 0.0)])?)
        }
        "bdi" => {
            let lambda = p.nonneg("lambda", 0.9)?;
            let mu = p.positive("mu", 1.0)?;
            let nu = p.nonneg("nu", 2.0)?;
            Model::Linear(bdi(lambda, mu, nu)?)
        }
        "mm_inf" => {
            let nu = p.nonneg("nu", 2.0)?;
            let mu = p.positive("mu", 1.0)?;
            Model::Linear(LinearRateGenerator::markov(&[(1, 0.0, nu), (-1, mu, 0.0)])?)
        }
        "signed_mm_inf" => {
            let nu = p.get("nu", -1.0)?;
            let mu = p.positive("mu", 1.0)?;
            let alpha0 = p.get("alpha0", -mu)?;
            let beta0 = p.get("beta0", -nu)?;
            Model::Linear(
                LinearRateGenerator::new()
                    .with_rate(1, 0.0, nu)?
                    .with_rate(-1, mu, 0.0)?
                    .with_rate(0, alpha0, beta0)?,
            )
        }
        "schlogl" => {
            let v = p.positive("V", 25.0)?;
            let k1 = p.nonneg("k1", 3.0)?;
            let km1 = p.nonneg("km1", 0.6)?;
            let k2 = p.nonneg("k2", 0.25)?;
            let km2 = p.nonneg("km2", 2.95)?;
            let cap = p.count("N", 200, 1)?;
            let affine = LinearRateGenerator::markov(&[(1, 0.0, k2 * v), (-1, km2, 0.0)])?;
            let remainder =
                birth_death_remainder(cap, |n| k1 * n * (n - 1.0) / v, |n| km1 * n * (n - 1.0) * (n - 2.0) / (v * v))?;
            Model::Hybrid(HybridModel::new(vec![affine], remainder, cap)?)
        }
        "coag_branching" => {
            let lambda = p.nonneg("lambda", 0.9)?;
            let mu = p.positive("mu", 1.0)?;
            let nu = p.nonneg("nu", 2.0)?;
            let eps = p.nonneg("eps", 1e-3)?;
            let cap = p.count("N", 120, 1)?;
            let remainder = coagulation(cap).scaled(eps);
            Model::Hybrid(HybridModel::new(vec![bdi(lambda, mu, nu)?], remainder, cap)?)
        }
        "predator_prey_K" => {
            let k = p.count("K", 2, 2)?;
            let cap = p.count("N", 8, 1)?;
            let gamma = p.nonneg("gamma", 0.1)?;
            let (nu_default, mu_default): (Vec<f64>, Vec<f64>) =
                if k == 2 { (vec![10.0, 0.5], vec![1.0, 1.0]) } else { (vec![2.0; k], vec![1.0; k]) };
            let nu_all = params.get("nu").copied();
            let mu_all = params.get("mu").copied();
            if nu_all.is_some() {
                p.get("nu", 0.0)?;
            }
            if mu_all.is_some() {
                p.get("mu", 0.0)?;
            }
            let mut affine = Vec::with_capacity(k);
            for i in 0..k {
                let nu = p.nonneg(&format!("nu_{i}"), nu_all.unwrap_or(nu_default[i]))?;
                let mu = p.positive(&format!("mu_{i}"), mu_all.unwrap_or(mu_default[i]))?;
                affine.push(LinearRateGenerator::markov(&[(1, 0.0, nu), (-1, mu, 0.0)])?);
            }
            let remainder = predation(k, cap, gamma)?;
            Model::Hybrid(HybridModel::new(affine, remainder, cap)?)
        }
        "telegraph_gr" => {
            let n_t = p.count("n_T", 6, 3)?;
            let k_on = p.positive("k_on", 0.35)?;
            let k_off = p.positive("k_off", 0.55)?;
            let k_chain = p.positive("k_chain", 6.0)?;
            let mu = p.positive("mu", 1.0)?;
            Model::Telegraph(MatrixTelegraphModel::gr_chain(n_t, k_on, k_off, k_chain, mu)?)
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    p.finish()?;
    Ok(model)
}

fn bdi(lambda: f64, mu: f64, nu: f64) -> Result<LinearRateGenerator> {
    LinearRateGenerator::markov(&[(1, lambda, nu), (-1, mu, 0.0)])
}

/// Tridiagonal count-only remainder with up-rate `up(n)` and down-rate `down(n)`;
/// the diagonal carries the full outflow.
pub(crate) fn birth_death_remainder(
    cap: usize,
    up: impl Fn(f64) -> f64,
    down: impl Fn(f64) -> f64,
) -> Result<SparseOperator> {
    let mut t = Vec::new();
    for n in 0..=cap {
        let x = n as f64;
        let (u, d) = (up(x), if n > 0 { down(x) } else { 0.0 });
        if n < cap {
            t.push((n + 1, n, u));
        }
        if n > 0 {
            t.push((n - 1, n, d));
        }
        t.push((n, n, -(u + d)));
    }
    SparseOperator::from_triplets(cap + 1, t)?.with_band(1, 1)
}

/// `X + X → X` at rate `n(n−1)/2`.
pub(crate) fn coagulation(cap: usize) -> SparseOperator {
    birth_death_remainder(cap, |_| 0.0, |n| n * (n - 1.0) / 2.0).expect("tridiagonal")
}

/// Bilinear predation on the joint box: `X_a + X_b → 2 X_b` at `γ x_a x_b`.
fn predation(k: usize, cap: usize, gamma: f64) -> Result<SparseOperator> {
    let pairs: Vec<(usize, usize)> = if k == 2 { vec![(0, 1)] } else { (0..k).map(|i| (i, (i + 1) % k)).collect() };
    let side = cap + 1;
    let st = strides(k, side);
    let dim = side.pow(k as u32);
    let mut idx = vec![0usize; k];
    let mut t = Vec::new();
    for flat in 0..dim {
        unflatten(flat, side, &mut idx);
        for &(a, b) in &pairs {
            let rate = gamma * (idx[a] * idx[b]) as f64;
            if rate == 0.0 {
                continue;
            }
            t.push((flat, flat, -rate));
            if idx[b] < cap {
                t.push((flat - st[a] + st[b], flat, rate));
            }
        }
    }
    SparseOperator::from_triplets(dim, t)
}
