//! Model definitions.
//!
//! A linear-rate generator has off-diagonal entries `L_{n+r,n} = α_r n + β_r` with
//! offsets `r ≥ −1` and `β_{−1} = 0`. Its drift and source polynomials are
//! `A(z) = Σ α_r z^{r+1}` and `B(z) = Σ β_r z^r`.

mod hybrid;
mod multitype;
mod operator;
mod telegraph;
mod zoo;

use std::collections::BTreeMap;

pub use hybrid::HybridModel;
pub use multitype::{MultiTypeGenerator, MultiTypeTerm};
pub use operator::{Band, SparseOperator};
pub use telegraph::MatrixTelegraphModel;
pub use zoo::{model_zoo, Model, ModelConfig, MODEL_CONFIG_SCHEMA, ZOO_NAMES};

use crate::error::{Error, Result};
use crate::series::SeriesWindow;

/// Per-offset rates: `α` per particle, `β` per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rates {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearRateGenerator {
    entries: BTreeMap<i64, Rates>,
}

impl LinearRateGenerator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `(α, β)` at offset `r`, accumulating onto any existing entry.
    pub fn with_rate(mut self, r: i64, alpha: f64, beta: f64) -> Result<Self> {
        self.add_rate(r, alpha, beta)?;
        Ok(self)
    }

    pub fn add_rate(&mut self, r: i64, alpha: f64, beta: f64) -> Result<()> {
        if r < -1 {
            return Err(Error::param("r", format!("offset {r} below -1")));
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::NonFinite("generator rate"));
        }
        if r == -1 && beta != 0.0 {
            return Err(Error::param("beta_-1", "must be zero"));
        }
        let e = self.entries.entry(r).or_default();
        e.alpha += alpha;
        e.beta += beta;
        if e.alpha == 0.0 && e.beta == 0.0 {
            self.entries.remove(&r);
        }
        Ok(())
    }

    /// Builds a Markov generator from off-diagonal rates; the diagonal
    /// `α_0 = −Σα_r`, `β_0 = −Σβ_r` is derived so columns sum to zero.
    pub fn markov(off_diagonal: &[(i64, f64, f64)]) -> Result<Self> {
        let mut g = Self::new();
        let (mut sa, mut sb) = (0.0, 0.0);
        for &(r, a, b) in off_diagonal {
            if r == 0 {
                return Err(Error::param("r", "offset 0 is the derived diagonal"));
            }
            if a < 0.0 || b < 0.0 {
                return Err(Error::param("rate", format!("negative Markov rate at offset {r}")));
            }
            g.add_rate(r, a, b)?;
            sa += a;
            sb += b;
        }
        g.add_rate(0, -sa, -sb)?;
        Ok(g)
    }

    pub fn entries(&self) -> impl Iterator<Item = (i64, Rates)> + '_ {
        self.entries.iter().map(|(&r, &v)| (r, v))
    }

    pub fn rate(&self, r: i64) -> Rates {
        self.entries.get(&r).copied().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest offset present (`0` for an empty generator).
    pub fn max_offset(&self) -> i64 {
        self.entries.keys().next_back().copied().unwrap_or(0).max(0)
    }

    /// `true` when `Σ_r α_r = Σ_r β_r = 0` within `tol`.
    pub fn is_conservative(&self, tol: f64) -> bool {
        let (a, b) = self.entries.values().fold((0.0, 0.0), |s, v| (s.0 + v.alpha, s.1 + v.beta));
        a.abs() <= tol && b.abs() <= tol
    }
}

/// Coefficients of `A(z)` (degree ≤ r_max+1) and `B(z)` (degree ≤ r_max).
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPair {
    pub a: SeriesWindow,
    pub b: SeriesWindow,
}

impl PolynomialPair {
    pub fn has_source(&self) -> bool {
        self.b.coeffs().iter().any(|&c| c != 0.0)
    }

    /// Reads `α_r = [z^{r+1}]A`, `β_r = [z^r]B` back into a generator.
    pub fn to_generator(&self) -> Result<LinearRateGenerator> {
        let mut g = LinearRateGenerator::new();
        let top = self.a.cap().max(self.b.cap() + 1);
        for k in 0..=top {
            let r = k as i64 - 1;
            let alpha = self.a.coeffs().get(k).copied().unwrap_or(0.0);
            let beta = if r >= 0 { self.b.coeffs().get(r as usize).copied().unwrap_or(0.0) } else { 0.0 };
            if alpha != 0.0 || beta != 0.0 {
                g.add_rate(r, alpha, beta)?;
            }
        }
        Ok(g)
    }
}

pub fn polynomials_of(gen: &LinearRateGenerator) -> PolynomialPair {
    let r_max = gen.max_offset() as usize;
    let mut a = SeriesWindow::zeros(r_max + 1);
    let mut b = SeriesWindow::zeros(r_max);
    for (r, v) in gen.entries() {
        a.coeffs_mut()[(r + 1) as usize] = v.alpha;
        if r >= 0 {
            b.coeffs_mut()[r as usize] = v.beta;
        }
    }
    PolynomialPair { a, b }
}

/// `(N+1)×(N+1)` operator with `α_r n + β_r` at `(n+r, n)` for in-window targets.
///
/// Transitions leaving the window are dropped while the diagonal keeps its full
/// outflow, so truncated columns leak mass (absorbing cap).
pub fn truncate_generator(gen: &LinearRateGenerator, cap: usize) -> SparseOperator {
    let mut triplets = Vec::new();
    for n in 0..=cap {
        for (r, v) in gen.entries() {
            let target = n as i64 + r;
            if target < 0 || target > cap as i64 {
                continue;
            }
            let val = v.alpha * n as f64 + v.beta;
            if val != 0.0 {
                triplets.push((target as usize, n, val));
            }
        }
    }
    let lower = gen.max_offset() as usize;
    let upper = usize::from(gen.entries().any(|(r, _)| r == -1));
    SparseOperator::from_triplets(cap + 1, triplets)
        .and_then(|op| op.with_band(lower, upper))
        .expect("truncated generator entries lie inside the window and band")
}
