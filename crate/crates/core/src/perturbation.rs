//! Expansion in a small remainder: `p = Σ_k ε^k p^{(k)}` with
//! `p^{(k)}(t) = ∫₀ᵗ e^{(t−s)𝒜} ℬ p^{(k−1)}(s) ds`.
//!
//! All orders share one uniform grid `s_j = j·t/n`. Affine propagation over
//! `(j−i)·h` uses the exact closure kernel; the integrals use composite Simpson
//! weights (trapezoid at `j = 1`, a closing 3/8 panel at odd `j ≥ 3`).

use nalgebra::DMatrix;

use crate::closure::{composition_kernel, integrate_closure_with, ClosureOptions};
use crate::error::{Error, Result};
use crate::generators::{LinearRateGenerator, SparseOperator};
use crate::series::SeriesWindow;

/// Quadrature weights for `∫₀^{j h}` on nodes `0..=j`.
pub fn cumulative_weights(j: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; j + 1];
    match j {
        0 => {}
        1 => {
            w[0] = h / 2.0;
            w[1] = h / 2.0;
        }
        _ => {
            let simpson_end = if j % 2 == 0 { j } else { j - 3 };
            for p in (0..simpson_end).step_by(2) {
                w[p] += h / 3.0;
                w[p + 1] += 4.0 * h / 3.0;
                w[p + 2] += h / 3.0;
            }
            if j % 2 == 1 {
                let b = j - 3;
                for (o, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                    w[b + o] += 3.0 * h / 8.0 * c;
                }
            }
        }
    }
    w
}

/// Per-order trajectories on the grid; `orders[k][j] = p^{(k)}(s_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSeries {
    pub orders: Vec<Vec<Vec<f64>>>,
    pub t: f64,
}

impl PerturbationSeries {
    /// `Σ_{k ≤ order} ε^k p^{(k)}(t)`.
    pub fn evaluate(&self, eps: f64, order: usize) -> Result<SeriesWindow> {
        if order >= self.orders.len() {
            return Err(Error::param("order", format!("only {} orders were computed", self.orders.len())));
        }
        let n = self.orders[0][0].len();
        let mut out = vec![0.0; n];
        let mut w = 1.0;
        for traj in self.orders.iter().take(order + 1) {
            let last = traj.last().expect("grid is non-empty");
            for (o, v) in out.iter_mut().zip(last) {
                *o += w * v;
            }
            w *= eps;
        }
        SeriesWindow::new(out)
    }
}

/// Computes `p^{(0..=order)}` on the grid with `subintervals` (even) panels.
pub fn perturbation_series(
    affine: &LinearRateGenerator,
    remainder: &SparseOperator,
    init: &SeriesWindow,
    order: usize,
    t: f64,
    subintervals: usize,
) -> Result<PerturbationSeries> {
    if subintervals == 0 || subintervals % 2 != 0 {
        return Err(Error::param("subintervals", "must be a positive even number"));
    }
    let cap = remainder.dim() - 1;
    if init.cap() != cap {
        return Err(Error::CapMismatch { left: init.cap(), right: cap });
    }
    let h = t / subintervals as f64;
    let opts = ClosureOptions { rtol: 1e-13, atol: 1e-17, ..Default::default() };
    let kernels: Vec<DMatrix<f64>> = (0..=subintervals)
        .map(|d| {
            let (state, _) = integrate_closure_with(affine, cap, d as f64 * h, &opts)?;
            Ok(composition_kernel(&state, cap).matrix)
        })
        .collect::<Result<_>>()?;
    let apply = |k: &DMatrix<f64>, x: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; cap + 1];
        for (m, &w) in x.iter().enumerate() {
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(k.column(m).iter()) {
                    *o += w * v;
                }
            }
        }
        out
    };
    let zeroth: Vec<Vec<f64>> = kernels.iter().map(|k| apply(k, init.coeffs())).collect();
    let mut orders = vec![zeroth];
    for _ in 0..order {
        let prev = orders.last().expect("zeroth order present");
        let forced: Vec<Vec<f64>> = prev.iter().map(|p| remainder.apply(p)).collect();
        let mut traj = Vec::with_capacity(subintervals + 1);
        for j in 0..=subintervals {
            let w = cumulative_weights(j, h);
            let mut acc = vec![0.0; cap + 1];
            for (i, wi) in w.iter().enumerate() {
                if *wi == 0.0 {
                    continue;
                }
                for (a, v) in acc.iter_mut().zip(apply(&kernels[j - i], &forced[i])) {
                    *a += wi * v;
                }
            }
            traj.push(acc);
        }
        orders.push(traj);
    }
    Ok(PerturbationSeries { orders, t })
}

/// `Σ_{k ≤ order} ε^k p^{(k)}(t)` from initial data `init` on the remainder's window.
pub fn perturbation_solve(
    affine: &LinearRateGenerator,
    remainder: &SparseOperator,
    init: &SeriesWindow,
    eps: f64,
    order: usize,
    t: f64,
    subintervals: usize,
) -> Result<SeriesWindow> {
    perturbation_series(affine, remainder, init, order, t, subintervals)?.evaluate(eps, order)
}
