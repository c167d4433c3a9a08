//! Hidden-state models with a common per-particle degradation rate `μ`.
//!
//! The joint generating vector satisfies `𝒁(z,t) = 𝐊_t(z) 𝒁₀(Φ_t(z))` with
//! `Φ_t(z) = c₀ + c₁ z`, `c₁ = e^{−μt}`, `c₀ = 1 − c₁`. The multiplier blocks
//! obey `d𝐊^{(m)}/dt = 𝐊^{(m)}(𝐀 + c₀𝐁) + c₁ 𝐊^{(m−1)}𝐁`, later times acting
//! on the right.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::generators::MatrixTelegraphModel;
use crate::integrators::{rk45_solve_with, rk4_fixed_solve_in_place, OdeProblem, Rk45Options, StepStats};
use crate::series::Coefficients;
use crate::splitting::richardson_combine;

pub fn telegraph_characteristic(mu: f64, t: f64, z: f64) -> f64 {
    1.0 - (1.0 - z) * (-mu * t).exp()
}

/// `P[a, m]`: weight of hidden state `a` with `m` transcripts.
///
/// Stored column-major, so the flat layout is `m·n_T + a`, matching
/// [`MatrixTelegraphModel::joint_generator`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointArray {
    values: DMatrix<f64>,
}

impl JointArray {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() == 0 || values.nrows() == 0 {
            return Err(Error::ShapeMismatch("joint array needs at least one state and one count".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("joint array"));
        }
        Ok(Self { values })
    }

    pub fn zeros(hidden: usize, cap: usize) -> Self {
        Self { values: DMatrix::zeros(hidden, cap + 1) }
    }

    /// Hidden-state distribution `weights` placed at count 0.
    pub fn at_zero_count(weights: &[f64], cap: usize) -> Self {
        let mut p = Self::zeros(weights.len(), cap);
        p.values.column_mut(0).copy_from_slice(weights);
        p
    }

    pub fn from_flat(hidden: usize, cap: usize, flat: Vec<f64>) -> Result<Self> {
        if flat.len() != hidden * (cap + 1) {
            return Err(Error::ShapeMismatch(format!("{} values for a {hidden}x{} joint array", flat.len(), cap + 1)));
        }
        Self::new(DMatrix::from_vec(hidden, cap + 1, flat))
    }

    pub fn hidden_states(&self) -> usize {
        self.values.nrows()
    }

    pub fn cap(&self) -> usize {
        self.values.ncols() - 1
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.values
    }

    pub fn as_flat(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn get(&self, a: usize, m: usize) -> f64 {
        self.values[(a, m)]
    }

    pub fn sum(&self) -> f64 {
        self.values.sum()
    }

    pub fn count_marginal(&self) -> Vec<f64> {
        self.values.column_iter().map(|c| c.sum()).collect()
    }

    pub fn hidden_marginal(&self) -> Vec<f64> {
        self.values.row_iter().map(|r| r.sum()).collect()
    }

    /// Same hidden states, count window changed to `cap` (zero-filled or cut).
    pub fn resized(&self, cap: usize) -> Self {
        let n = self.hidden_states();
        let keep = (cap + 1).min(self.values.ncols());
        let mut v = DMatrix::zeros(n, cap + 1);
        v.columns_mut(0, keep).copy_from(&self.values.columns(0, keep));
        Self { values: v }
    }
}

impl Coefficients for JointArray {
    fn values(&self) -> &[f64] {
        self.values.as_slice()
    }

    fn shape(&self) -> Vec<usize> {
        vec![self.values.nrows(), self.values.ncols()]
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self { values: DMatrix::from_vec(self.values.nrows(), self.values.ncols(), values) }
    }
}

/// Blocks `𝐊^{(0..M)}` of the matrix multiplier at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMultiplierState {
    pub blocks: Vec<DMatrix<f64>>,
    pub t: f64,
    pub mu: f64,
}

impl MatrixMultiplierState {
    pub fn initial(hidden: usize, cap: usize, mu: f64) -> Self {
        let mut blocks = vec![DMatrix::zeros(hidden, hidden); cap + 1];
        blocks[0] = DMatrix::identity(hidden, hidden);
        Self { blocks, t: 0.0, mu }
    }

    pub fn cap(&self) -> usize {
        self.blocks.len() - 1
    }

    fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.iter().copied()).collect()
    }

    fn from_flat(n: usize, cap: usize, y: &[f64], t: f64, mu: f64) -> Self {
        let blocks = (0..=cap).map(|m| DMatrix::from_column_slice(n, n, &y[m * n * n..(m + 1) * n * n])).collect();
        Self { blocks, t, mu }
    }
}

/// `out = x · y` for column-major `n×n` blocks, accumulated with weight `w`.
fn gemm_acc(n: usize, w: f64, x: &[f64], y: &[f64], out: &mut [f64]) {
    for j in 0..n {
        for k in 0..n {
            let ykj = w * y[j * n + k];
            if ykj != 0.0 {
                let xk = &x[k * n..(k + 1) * n];
                let oj = &mut out[j * n..(j + 1) * n];
                for (o, &v) in oj.iter_mut().zip(xk) {
                    *o += v * ykj;
                }
            }
        }
    }
}

fn multiplier_rhs(model: &MatrixTelegraphModel, cap: usize) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
    let n = model.hidden_states();
    let nn = n * n;
    let a: Vec<f64> = model.a().iter().copied().collect();
    let b: Vec<f64> = model.b().iter().copied().collect();
    let mu = model.mu();
    move |t: f64, y: &[f64], dy: &mut [f64]| {
        let c1 = (-mu * t).exp();
        let c0 = -(-mu * t).exp_m1();
        let g: Vec<f64> = a.iter().zip(&b).map(|(x, z)| x + c0 * z).collect();
        dy.iter_mut().for_each(|v| *v = 0.0);
        for m in 0..=cap {
            let (lo, hi) = (m * nn, (m + 1) * nn);
            gemm_acc(n, 1.0, &y[lo..hi], &g, &mut dy[lo..hi]);
            if m > 0 {
                gemm_acc(n, c1, &y[lo - nn..lo], &b, &mut dy[lo..hi]);
            }
        }
    }
}

/// Fixed-step RK4 on the multiplier blocks `0..=M`.
pub fn integrate_matrix_multiplier(
    model: &MatrixTelegraphModel,
    cap: usize,
    t: f64,
    steps: usize,
) -> Result<MatrixMultiplierState> {
    let n = model.hidden_states();
    let init = MatrixMultiplierState::initial(n, cap, model.mu());
    if t == 0.0 {
        return Ok(init);
    }
    let mut y = init.flatten();
    let f = multiplier_rhs(model, cap);
    rk4_fixed_solve_in_place(&f, &mut y, 0.0, t, steps)?;
    Ok(MatrixMultiplierState::from_flat(n, cap, &y, t, model.mu()))
}

/// Adaptive RK45 on the multiplier blocks.
pub fn integrate_matrix_multiplier_adaptive(
    model: &MatrixTelegraphModel,
    cap: usize,
    t: f64,
    rtol: f64,
    atol: f64,
) -> Result<(MatrixMultiplierState, StepStats)> {
    let n = model.hidden_states();
    let init = MatrixMultiplierState::initial(n, cap, model.mu());
    if t == 0.0 {
        return Ok((init, StepStats::default()));
    }
    let f = multiplier_rhs(model, cap);
    let problem = OdeProblem::new(f, init.flatten(), 0.0, t);
    let (y, stats) = rk45_solve_with(&problem, &Rk45Options { rtol, atol, ..Default::default() })?;
    Ok((MatrixMultiplierState::from_flat(n, cap, &y, t, model.mu()), stats))
}

/// `P(m) = Σ_j 𝐊^{(j)} W(m−j)` where `W` is `init` thinned to survival `e^{−μt}`.
pub fn apply_multiplier(state: &MatrixMultiplierState, init: &JointArray) -> Result<JointArray> {
    let n = init.hidden_states();
    if state.blocks[0].nrows() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} hidden states vs multiplier of size {}",
            n,
            state.blocks[0].nrows()
        )));
    }
    let cap = state.cap();
    let w = binomial_thinning_half(&init.resized(cap.max(init.cap())), state.mu, state.t)?;
    let support = (0..=w.cap()).rev().find(|&m| w.values.column(m).iter().any(|&v| v != 0.0)).unwrap_or(0);
    let mut out = DMatrix::zeros(n, cap + 1);
    for m in 0..=cap {
        let mut col = out.column_mut(m);
        for i in 0..=m.min(support) {
            col.gemv(1.0, &state.blocks[m - i], &w.values.column(i), 1.0);
        }
    }
    JointArray::new(out)
}

/// RK4 matrix closure with `steps` steps; output on counts `0..=M`.
pub fn matrix_closure_solve(
    model: &MatrixTelegraphModel,
    init: &JointArray,
    cap: usize,
    t: f64,
    steps: usize,
) -> Result<JointArray> {
    let state = integrate_matrix_multiplier(model, cap, t, steps)?;
    apply_multiplier(&state, init)
}

/// Fourth-order Richardson on the RK4 closure: `(16 P_{2S} − P_S)/15`.
pub fn closure_richardson_solve(
    model: &MatrixTelegraphModel,
    init: &JointArray,
    cap: usize,
    t: f64,
    steps: usize,
) -> Result<JointArray> {
    let coarse = matrix_closure_solve(model, init, cap, t, steps)?;
    let fine = matrix_closure_solve(model, init, cap, t, 2 * steps)?;
    richardson_combine(&coarse, &fine, 4)
}

/// Row-stochastic pure-death kernel `T[n, m] = C(m,n) s^n (1−s)^{m−n}` on `{0..M}`.
pub(crate) fn thinning_matrix(cap: usize, s: f64) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(cap + 1, cap + 1);
    if s >= 1.0 {
        t.fill_with_identity();
        return t;
    }
    if s <= 0.0 {
        t.row_mut(0).fill(1.0);
        return t;
    }
    let mut lf = vec![0.0f64; cap + 1];
    for k in 1..=cap {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    let (ls, lq) = (s.ln(), (-s).ln_1p());
    for m in 0..=cap {
        for k in 0..=m {
            t[(k, m)] = (lf[m] - lf[k] - lf[m - k] + k as f64 * ls + (m - k) as f64 * lq).exp();
        }
    }
    t
}

/// Exact pure-death propagation of each hidden-state row over `dt`.
pub fn binomial_thinning_half(p: &JointArray, mu: f64, dt: f64) -> Result<JointArray> {
    if dt < 0.0 || !dt.is_finite() {
        return Err(Error::param("dt", "binomial thinning needs a finite dt ≥ 0"));
    }
    if dt == 0.0 || mu == 0.0 {
        return Ok(p.clone());
    }
    let kernel = thinning_matrix(p.cap(), (-mu * dt).exp());
    Ok(JointArray { values: &p.values * kernel.transpose() })
}

/// `Ṗ_m = 𝐀P_m + 𝐁P_{m−1}`, `P_{−1} = 0`, by `inner_steps` RK4 steps.
pub fn production_half_step(
    p: &JointArray,
    model: &MatrixTelegraphModel,
    dt: f64,
    inner_steps: usize,
) -> Result<JointArray> {
    if dt < 0.0 {
        return Err(Error::param("dt", "must be nonnegative"));
    }
    if p.hidden_states() != model.hidden_states() {
        return Err(Error::ShapeMismatch("joint array and model hidden states differ".into()));
    }
    let mut out = p.clone();
    if dt == 0.0 {
        return Ok(out);
    }
    let (n, cols) = (p.hidden_states(), p.cap() + 1);
    let (a, b) = (model.a().clone(), model.b().clone());
    let f = move |_: f64, y: &[f64], dy: &mut [f64]| {
        let x = nalgebra::DMatrixView::from_slice(y, n, cols);
        let mut d = nalgebra::DMatrixViewMut::from_slice(dy, n, cols);
        d.gemm(1.0, &a, &x, 0.0);
        if cols > 1 {
            let mut upper = d.columns_mut(1, cols - 1);
            upper.gemm(1.0, &b, &x.columns(0, cols - 1), 1.0);
        }
    };
    rk4_fixed_solve_in_place(&f, out.values.as_mut_slice(), 0.0, dt, inner_steps)?;
    Ok(out)
}

/// Strang split: thinning `dt/2`, production `dt`, thinning `dt/2`, repeated `k_s` times.
pub fn purebd_strang_solve(
    model: &MatrixTelegraphModel,
    init: &JointArray,
    cap: usize,
    t: f64,
    k_s: usize,
    inner_steps: usize,
) -> Result<JointArray> {
    if k_s == 0 {
        return Err(Error::param("K_s", "must be at least 1"));
    }
    let dt = t / k_s as f64;
    let half = thinning_matrix(cap, (-model.mu() * dt / 2.0).exp()).transpose();
    let mut p = init.resized(cap);
    for _ in 0..k_s {
        p.values = &p.values * &half;
        p = production_half_step(&p, model, dt, inner_steps)?;
        p.values = &p.values * &half;
    }
    Ok(p)
}

/// `(4 P_{2K} − P_K)/3` on the Strang split.
pub fn purebd_richardson_solve(
    model: &MatrixTelegraphModel,
    init: &JointArray,
    cap: usize,
    t: f64,
    k_s: usize,
    inner_steps: usize,
) -> Result<JointArray> {
    let coarse = purebd_strang_solve(model, init, cap, t, k_s, inner_steps)?;
    let fine = purebd_strang_solve(model, init, cap, t, 2 * k_s, inner_steps)?;
    richardson_combine(&coarse, &fine, 2)
}
