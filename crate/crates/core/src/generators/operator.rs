use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;

/// Bandwidths: `lower = max(row − col)`, `upper = max(col − row)` over nonzeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    pub lower: usize,
    pub upper: usize,
}

/// Square sparse operator assembled from triplets, sorted by (row, col).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
    band: Option<Band>,
}

impl SparseOperator {
    /// Duplicates are summed; exact zeros after summation are dropped.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::InvalidArgument(format!("entry ({r},{c}) outside dimension {dim}")));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse operator entry"));
            }
            entries.push((r, c, v));
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        Ok(Self { dim, entries: merged, band: None })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: Vec::new(), band: None }
    }

    /// Declares a band; every stored entry must lie inside it.
    pub fn with_band(mut self, lower: usize, upper: usize) -> Result<Self> {
        let actual = self.detect_band();
        if actual.lower > lower || actual.upper > upper {
            return Err(Error::InvalidArgument(format!(
                "entries reach bandwidth ({}, {}) beyond declared ({lower}, {upper})",
                actual.lower, actual.upper
            )));
        }
        self.band = Some(Band { lower, upper });
        Ok(self)
    }

    pub fn without_band(mut self) -> Self {
        self.band = None;
        self
    }

    pub fn band(&self) -> Option<Band> {
        self.band
    }

    pub fn detect_band(&self) -> Band {
        self.entries.iter().fold(Band { lower: 0, upper: 0 }, |b, &(r, c, _)| Band {
            lower: b.lower.max(r.saturating_sub(c)),
            upper: b.upper.max(c.saturating_sub(r)),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries.binary_search_by(|e| (e.0, e.1).cmp(&(row, col))).map_or(0.0, |i| self.entries[i].2)
    }

    /// `y = L x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r] = v;
            }
        }
        d
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.dim];
        for &(_, c, v) in &self.entries {
            s[c] += v;
        }
        s
    }

    pub fn scaled(&self, f: f64) -> Self {
        let entries = if f == 0.0 { Vec::new() } else { self.entries.iter().map(|&(r, c, v)| (r, c, v * f)).collect() };
        Self { dim: self.dim, entries, band: self.band }
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch(format!("operator dims {} and {}", self.dim, other.dim)));
        }
        let op = Self::from_triplets(self.dim, self.entries.iter().chain(&other.entries).copied())?;
        Ok(match (self.band, other.band) {
            (Some(a), Some(b)) => {
                Self { band: Some(Band { lower: a.lower.max(b.lower), upper: a.upper.max(b.upper) }), ..op }
            }
            _ => op,
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `I + s·L` in band storage; requires a declared band.
    pub fn shifted_band(&self, s: f64) -> Option<BandMatrix> {
        let band = self.band?;
        let mut m = BandMatrix::identity(self.dim, band.lower, band.upper);
        for &(r, c, v) in &self.entries {
            m.add(r, c, s * v);
        }
        Some(m)
    }
}
