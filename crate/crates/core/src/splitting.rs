//! Symmetric splitting `e^{(Δt/2)𝒜} e^{Δt ℬ} e^{(Δt/2)𝒜}` of an affine part
//! against a non-affine remainder, plus Richardson extrapolation.
//!
//! The affine half step applies one windowed closure kernel per species along
//! its own axis; the joint propagator is never formed.

use nalgebra::{DMatrix, DVector};

use crate::baselines::{dense_expm, uniformization_solve};
use crate::closure::{composition_kernel, integrate_closure_with, ClosureOptions};
use crate::error::{Error, Result};
use crate::generators::{HybridModel, LinearRateGenerator, SparseOperator};
use crate::integrators::{rosenbrock_solve_with, OdeProblem, RosenbrockOptions};
use crate::series::{strides, Coefficients, TensorWindow};

/// How a propagator is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    ClosedForm,
    Integrator,
}

/// A state map advancing by a fixed `duration`.
pub struct PropagatorHalf<'a, S> {
    duration: f64,
    exactness: Exactness,
    map: Box<dyn FnMut(&S) -> Result<S> + 'a>,
}

impl<'a, S> PropagatorHalf<'a, S> {
    pub fn new(duration: f64, exactness: Exactness, map: impl FnMut(&S) -> Result<S> + 'a) -> Result<Self> {
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::param("duration", "must be finite and nonnegative"));
        }
        Ok(Self { duration, exactness, map: Box::new(map) })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn exactness(&self) -> Exactness {
        self.exactness
    }

    pub fn apply(&mut self, state: &S) -> Result<S> {
        (self.map)(state)
    }
}

impl<S> std::fmt::Debug for PropagatorHalf<'_, S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PropagatorHalf").field("duration", &self.duration).field("exactness", &self.exactness).finish()
    }
}

/// `k_s` steps of `half ∘ full ∘ half`. The full step must last twice the half step.
pub fn strang_solve<S>(
    affine_half: &mut PropagatorHalf<'_, S>,
    remainder_full: &mut PropagatorHalf<'_, S>,
    p0: &S,
    k_s: usize,
) -> Result<S>
where
    S: Clone,
{
    if k_s == 0 {
        return Err(Error::param("K_s", "must be at least 1"));
    }
    let (h, f) = (affine_half.duration(), remainder_full.duration());
    if (f - 2.0 * h).abs() > 1e-12 * f.max(1.0) {
        return Err(Error::InvalidArgument(format!("full step {f} is not twice the half step {h}")));
    }
    let mut p = p0.clone();
    for _ in 0..k_s {
        p = affine_half.apply(&p)?;
        p = remainder_full.apply(&p)?;
        p = affine_half.apply(&p)?;
    }
    Ok(p)
}

/// `(2^p · run_2k − run_k) / (2^p − 1)`.
pub fn richardson_combine<S: Coefficients>(run_k: &S, run_2k: &S, order: u32) -> Result<S> {
    if run_k.shape() != run_2k.shape() {
        return Err(Error::ShapeMismatch(format!(
            "Richardson runs of shape {:?} and {:?}",
            run_k.shape(),
            run_2k.shape()
        )));
    }
    if order == 0 {
        return Err(Error::param("order", "must be positive"));
    }
    let w = 2f64.powi(order as i32);
    let v = run_k.values().iter().zip(run_2k.values()).map(|(a, b)| (w * b - a) / (w - 1.0)).collect();
    Ok(run_k.with_values(v))
}

/// Engine for the remainder's full step `e^{Δt ℬ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerEngine {
    /// Rosenbrock when the remainder declares a band, uniformization otherwise.
    Auto,
    Rosenbrock {
        rtol: f64,
        atol: f64,
    },
    Uniformization {
        tol: f64,
    },
    /// Dense Padé exponential, formed once per step size.
    DenseExpm,
}

pub const DEFAULT_INNER_RTOL: f64 = 1e-10;
pub const DEFAULT_INNER_ATOL: f64 = 1e-15;
pub const DEFAULT_UNIFORMIZATION_TOL: f64 = 1e-14;

impl InnerEngine {
    fn resolve(self, op: &SparseOperator) -> Self {
        match self {
            InnerEngine::Auto if op.band().is_some() => {
                InnerEngine::Rosenbrock { rtol: DEFAULT_INNER_RTOL, atol: DEFAULT_INNER_ATOL }
            }
            InnerEngine::Auto => InnerEngine::Uniformization { tol: DEFAULT_UNIFORMIZATION_TOL },
            e => e,
        }
    }
}

/// `x ↦ e^{dt·ℬ} x` by the chosen engine.
pub fn remainder_propagator<'a>(
    op: &'a SparseOperator,
    dt: f64,
    engine: InnerEngine,
) -> Result<PropagatorHalf<'a, Vec<f64>>> {
    match engine.resolve(op) {
        InnerEngine::DenseExpm => {
            let e = dense_expm(&op.to_dense(), dt)?;
            PropagatorHalf::new(dt, Exactness::ClosedForm, move |x: &Vec<f64>| {
                Ok((&e * DVector::from_column_slice(x)).as_slice().to_vec())
            })
        }
        InnerEngine::Uniformization { tol } => {
            PropagatorHalf::new(dt, Exactness::ClosedForm, move |x: &Vec<f64>| uniformization_solve(op, x, dt, tol))
        }
        InnerEngine::Rosenbrock { rtol, atol } => {
            let opts = RosenbrockOptions { rtol, atol, ..Default::default() };
            PropagatorHalf::new(dt, Exactness::Integrator, move |x: &Vec<f64>| {
                let p = OdeProblem::linear(op, x.clone(), dt);
                rosenbrock_solve_with(&p, &opts).map(|(y, _)| y)
            })
        }
        InnerEngine::Auto => unreachable!("resolved above"),
    }
}

/// Windowed single-species propagator over `dt`: column `m` holds the closure
/// coefficients of `K_dt · Φ_dt^m` on `{0..N}`.
pub fn affine_window_propagator(gen: &LinearRateGenerator, cap: usize, dt: f64) -> Result<DMatrix<f64>> {
    let opts = ClosureOptions { rtol: 1e-13, atol: 1e-16, ..Default::default() };
    let (state, _) = integrate_closure_with(gen, cap, dt, &opts)?;
    Ok(composition_kernel(&state, cap).matrix)
}

/// Applies `kernels[a]` along axis `a` of a row-major `{0..N}^K` array.
pub fn apply_mode_wise(kernels: &[DMatrix<f64>], cap: usize, x: &[f64]) -> Vec<f64> {
    let k = kernels.len();
    let side = cap + 1;
    let st = strides(k, side);
    let mut cur = x.to_vec();
    let mut fiber = vec![0.0; side];
    let mut out_fiber = vec![0.0; side];
    for (axis, kern) in kernels.iter().enumerate() {
        let s = st[axis];
        for base in 0..cur.len() {
            if (base / s) % side != 0 {
                continue;
            }
            for (i, f) in fiber.iter_mut().enumerate() {
                *f = cur[base + i * s];
            }
            out_fiber.iter_mut().for_each(|v| *v = 0.0);
            for (m, &w) in fiber.iter().enumerate() {
                if w != 0.0 {
                    for (o, &kv) in out_fiber.iter_mut().zip(kern.column(m).iter()) {
                        *o += w * kv;
                    }
                }
            }
            for (i, &v) in out_fiber.iter().enumerate() {
                cur[base + i * s] = v;
            }
        }
    }
    cur
}

/// Tensor Strang solve: per-species closure kernels at `Δt/2` along each axis,
/// remainder full step on the joint box in between.
pub fn kron_strang_solve(
    per_species_affine: &[LinearRateGenerator],
    remainder: &SparseOperator,
    p0: &TensorWindow,
    t: f64,
    k_s: usize,
    inner: InnerEngine,
) -> Result<TensorWindow> {
    let (k, cap) = (p0.species(), p0.cap());
    if per_species_affine.len() != k {
        return Err(Error::ShapeMismatch(format!("{} affine parts for {k} species", per_species_affine.len())));
    }
    if remainder.dim() != p0.len() {
        return Err(Error::ShapeMismatch(format!("remainder dim {} vs box size {}", remainder.dim(), p0.len())));
    }
    if k_s == 0 {
        return Err(Error::param("K_s", "must be at least 1"));
    }
    let dt = t / k_s as f64;
    let kernels =
        per_species_affine.iter().map(|g| affine_window_propagator(g, cap, dt / 2.0)).collect::<Result<Vec<_>>>()?;
    let mut half =
        PropagatorHalf::new(dt / 2.0, Exactness::Integrator, |x: &Vec<f64>| Ok(apply_mode_wise(&kernels, cap, x)))?;
    let mut full = remainder_propagator(remainder, dt, inner)?;
    let out = strang_solve(&mut half, &mut full, &p0.coeffs().to_vec(), k_s)?;
    TensorWindow::from_vec(k, cap, out)
}

pub fn hybrid_strang_solve(
    model: &HybridModel,
    p0: &TensorWindow,
    t: f64,
    k_s: usize,
    inner: InnerEngine,
) -> Result<TensorWindow> {
    if p0.cap() != model.cap() || p0.species() != model.species() {
        return Err(Error::ShapeMismatch("initial tensor does not match the model box".into()));
    }
    kron_strang_solve(model.affine(), model.remainder(), p0, t, k_s, inner)
}

/// `(4 S_{2K} − S_K)/3` on the tensor Strang solve.
pub fn hybrid_richardson_solve(
    model: &HybridModel,
    p0: &TensorWindow,
    t: f64,
    k_s: usize,
    inner: InnerEngine,
) -> Result<TensorWindow> {
    let coarse = hybrid_strang_solve(model, p0, t, k_s, inner)?;
    let fine = hybrid_strang_solve(model, p0, t, 2 * k_s, inner)?;
    richardson_combine(&coarse, &fine, 2)
}
