use nalgebra::DMatrix;

use super::SparseOperator;
use crate::error::{Error, Result};

/// Hidden-state count model `Ṗ_m = A P_m + B P_{m−1} + μ((m+1)P_{m+1} − m P_m)`.
///
/// `A` holds transcript-free transitions (and the full diagonal outflow), `B` the
/// transcript-producing ones.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTelegraphModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    mu: f64,
    stochastic: bool,
}

impl MatrixTelegraphModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, mu: f64, stochastic: bool) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() != n || n == 0 {
            return Err(Error::ShapeMismatch("A and B must be equal-size square matrices".into()));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::param("mu", "must be positive"));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("telegraph matrices"));
        }
        if stochastic {
            let s = &a + &b;
            let scale = s.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for j in 0..n {
                let col: f64 = s.column(j).sum();
                if col.abs() > 1e-12 * scale {
                    return Err(Error::param("A+B", format!("column {j} sums to {col:e}")));
                }
            }
        }
        Ok(Self { a, b, mu, stochastic })
    }

    /// Builds `(A, B)` from off-diagonal rate lists `(to, from, rate)`; the
    /// diagonal of `A` carries the total outflow of both lists.
    pub fn from_rates(
        n: usize,
        silent: &[(usize, usize, f64)],
        producing: &[(usize, usize, f64)],
        mu: f64,
    ) -> Result<Self> {
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, n);
        for &(to, from, k) in silent {
            if to == from {
                return Err(Error::param("silent", "self-transition"));
            }
            a[(to, from)] += k;
            a[(from, from)] -= k;
        }
        for &(to, from, k) in producing {
            b[(to, from)] += k;
            a[(from, from)] -= k;
        }
        Self::new(a, b, mu, true)
    }

    /// G/R chain on `{G_off, G_on, R_1..R_{n_T−2}}`: gating in `A`; `G_on→R_1`,
    /// `R_i→R_{i+1}` and the release `R_last→G_on` in `B`.
    pub fn gr_chain(n_t: usize, k_on: f64, k_off: f64, k_chain: f64, mu: f64) -> Result<Self> {
        if n_t < 3 {
            return Err(Error::param("n_T", "G/R chain needs at least one elongation state"));
        }
        let silent = [(1, 0, k_on), (0, 1, k_off)];
        let mut producing = vec![(2, 1, k_chain)];
        for i in 2..n_t - 1 {
            producing.push((i + 1, i, k_chain));
        }
        producing.push((1, n_t - 1, k_chain));
        Self::from_rates(n_t, &silent, &producing, mu)
    }

    /// Two-state gene (off = 0, on = 1) producing at rate `rho` while on.
    pub fn two_state(k_on: f64, k_off: f64, rho: f64, mu: f64) -> Result<Self> {
        Self::from_rates(2, &[(1, 0, k_on), (0, 1, k_off)], &[(1, 1, rho)], mu)
    }

    /// One hidden state: immigration `nu`, degradation `mu`.
    pub fn single_state(nu: f64, mu: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, -nu), DMatrix::from_element(1, 1, nu), mu, true)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn is_stochastic(&self) -> bool {
        self.stochastic
    }

    pub fn hidden_states(&self) -> usize {
        self.a.nrows()
    }

    /// Capped joint generator on `{0..M}`, flat index `m·n_T + a`.
    pub fn joint_generator(&self, m_cap: usize) -> SparseOperator {
        let n = self.hidden_states();
        let mut t = Vec::new();
        for m in 0..=m_cap {
            for j in 0..n {
                let col = m * n + j;
                for i in 0..n {
                    let mut v = self.a[(i, j)];
                    if i == j {
                        v -= self.mu * m as f64;
                    }
                    if v != 0.0 {
                        t.push((m * n + i, col, v));
                    }
                    if m < m_cap && self.b[(i, j)] != 0.0 {
                        t.push(((m + 1) * n + i, col, self.b[(i, j)]));
                    }
                }
                if m > 0 {
                    t.push(((m - 1) * n + j, col, self.mu * m as f64));
                }
            }
        }
        let band = 2 * n;
        SparseOperator::from_triplets(n * (m_cap + 1), t)
            .and_then(|op| op.with_band(band, band))
            .expect("joint generator stays in the window")
    }
}
