//! Time steppers shared by every solver.
//!
//! - [`rk45_solve`]: Dormand–Prince 5(4) with PI step control.
//! - [`rk4_fixed_solve`]: classical RK4 at a fixed step count.
//! - [`rosenbrock_solve`]: linearly implicit order-2 method with an order-3
//!   error estimate and dense, banded or sparse Jacobian solves.
//! - [`taylor_solve`]: recursive Taylor series for `y' = a y + q y⋆y + c`.

mod rk4;
mod rk45;
mod rosenbrock;
mod taylor;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::generators::SparseOperator;

pub use rk4::{rk4_fixed_solve, rk4_fixed_solve_in_place};
pub use rk45::{rk45_solve, rk45_solve_with, Rk45Options};
pub use rosenbrock::{rosenbrock_solve, rosenbrock_solve_with, RosenbrockOptions};
pub use taylor::{taylor_solve, TaylorRhs};

/// Work counters for one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl StepStats {
    pub fn merge(&mut self, other: &StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
    }
}

pub type RhsFn<'a> = Box<dyn Fn(f64, &[f64], &mut [f64]) + 'a>;

/// Jacobian `∂f/∂y` descriptor.
///
/// Operators that declare a band are factored in band storage; the rest are
/// factored densely.
pub enum Jacobian<'a> {
    Dense(Box<dyn Fn(f64, &[f64]) -> DMatrix<f64> + 'a>),
    Sparse(Box<dyn Fn(f64, &[f64]) -> SparseOperator + 'a>),
    /// Linear problems: evaluated once, stage factorizations reused while `h` is unchanged.
    Constant(SparseOperator),
}

impl std::fmt::Debug for Jacobian<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Jacobian::Dense(_) => f.write_str("Jacobian::Dense"),
            Jacobian::Sparse(_) => f.write_str("Jacobian::Sparse"),
            Jacobian::Constant(op) => write!(f, "Jacobian::Constant(dim {}, nnz {})", op.dim(), op.nnz()),
        }
    }
}

/// `y' = f(t, y)` on `[t0, t1]` from `y0`.
pub struct OdeProblem<'a> {
    pub rhs: RhsFn<'a>,
    pub jacobian: Option<Jacobian<'a>>,
    pub y0: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    /// When false the Rosenbrock step adds a finite-difference `∂f/∂t` term.
    pub autonomous: bool,
}

impl<'a> OdeProblem<'a> {
    pub fn new(rhs: impl Fn(f64, &[f64], &mut [f64]) + 'a, y0: Vec<f64>, t0: f64, t1: f64) -> Self {
        Self { rhs: Box::new(rhs), jacobian: None, y0, t0, t1, autonomous: false }
    }

    pub fn with_jacobian(mut self, jac: Jacobian<'a>) -> Self {
        self.jacobian = Some(jac);
        self
    }

    pub fn autonomous(mut self) -> Self {
        self.autonomous = true;
        self
    }

    /// `y' = L y` with the constant Jacobian `L`.
    pub fn linear(op: &'a SparseOperator, y0: Vec<f64>, t: f64) -> Self {
        Self {
            rhs: Box::new(move |_, y, dy| op.matvec(y, dy)),
            jacobian: Some(Jacobian::Constant(op.clone())),
            y0,
            t0: 0.0,
            t1: t,
            autonomous: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.y0.len()
    }
}

impl std::fmt::Debug for OdeProblem<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OdeProblem")
            .field("dim", &self.y0.len())
            .field("t0", &self.t0)
            .field("t1", &self.t1)
            .field("jacobian", &self.jacobian)
            .finish()
    }
}

/// Weighted RMS norm `sqrt(mean((e_i / (atol + rtol·max(|y_i|, |ŷ_i|)))²))`.
pub(crate) fn error_norm(err: &[f64], y: &[f64], y_new: &[f64], rtol: f64, atol: f64) -> f64 {
    if err.is_empty() {
        return 0.0;
    }
    let s: f64 = err
        .iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / err.len() as f64).sqrt()
}

/// Starting step from the scaled sizes of `y0`, `f(y0)` and a difference
/// estimate of `f'`, for a method of the given order.
pub(crate) fn initial_step(
    p: &OdeProblem,
    y: &[f64],
    f0: &[f64],
    rtol: f64,
    atol: f64,
    order: i32,
    stats: &mut StepStats,
) -> f64 {
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| atol + rtol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; n];
    (p.rhs)(p.t0 + h0, &y1, &mut f1);
    stats.rhs_evals += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 =
        if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(1.0 / (order + 1) as f64) };
    (100.0 * h0).min(h1)
}

pub(crate) fn check_tolerances(rtol: f64, atol: f64) -> crate::Result<()> {
    if !(rtol > 0.0 && rtol.is_finite()) {
        return Err(crate::Error::param("rtol", "must be positive"));
    }
    if !(atol > 0.0 && atol.is_finite()) {
        return Err(crate::Error::param("atol", "must be positive"));
    }
    Ok(())
}
