//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Naive truncated convolution, written independently of the library.
pub fn naive_conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        for j in 0..n - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

/// Naive box-truncated convolution on `{0..N}^2`, row-major.
pub fn naive_conv2(side: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; side * side];
    for i1 in 0..side {
        for i2 in 0..side {
            for j1 in 0..side - i1 {
                for j2 in 0..side - i2 {
                    out[(i1 + j1) * side + i2 + j2] += a[i1 * side + i2] * b[j1 * side + j2];
                }
            }
        }
    }
    out
}

/// `e^{−c} c^n / n!` for `n = 0..=cap`; valid for signed `c`.
pub fn poisson(c: f64, cap: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(cap + 1);
    let mut v = (-c).exp();
    for n in 0..=cap {
        if n > 0 {
            v *= c / n as f64;
        }
        out.push(v);
    }
    out
}

/// Single-ancestor birth–death law from the textbook ratio form
/// `ρ = λ(1 − e^{−(μ−λ)t}) / (μ − λ e^{−(μ−λ)t})`, `p0 = (μ/λ)ρ`,
/// `p1 = (1 − p0)(1 − ρ)`. Requires `λ, μ > 0`, `λ ≠ μ`.
pub fn bd_ratio_form(lambda: f64, mu: f64, t: f64, cap: usize) -> Vec<f64> {
    let e = (-(mu - lambda) * t).exp();
    let rho = lambda * (1.0 - e) / (mu - lambda * e);
    let p0 = mu / lambda * rho;
    let p1 = (1.0 - p0) * (1.0 - rho);
    let mut out = vec![p0];
    for n in 1..=cap {
        out.push(p1 * rho.powi(n as i32 - 1));
    }
    out
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Series expansion `Σ_k (tM)^k/k!` with many terms; for tiny, norm-bounded matrices.
pub fn expm_series(m: &nalgebra::DMatrix<f64>, t: f64) -> nalgebra::DMatrix<f64> {
    let n = m.nrows();
    let mut term = nalgebra::DMatrix::<f64>::identity(n, n);
    let mut acc = term.clone();
    for k in 1..200 {
        term = &term * m * (t / k as f64);
        acc += &term;
    }
    acc
}
