//! Stationary laws of hidden-state count models and of split product-space maps.
//!
//! Level balance on `{0..M}`:
//! `μ(m+1)P_{m+1} − (μm·I − 𝐀)P_m + 𝐁P_{m−1} = 0`.

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::closure::JointArray;
use crate::error::{Error, Result};
use crate::generators::{HybridModel, MatrixTelegraphModel};
use crate::linalg::LuFactor;
use crate::series::TensorWindow;
use crate::splitting::{
    affine_window_propagator, apply_mode_wise, remainder_propagator, richardson_combine, InnerEngine,
};

/// Default contour radius.
pub const PGF_DEFAULT_RADIUS: f64 = 0.5;
/// Step off the regular-singular point `z = 1`.
pub const PGF_SEED_OFFSET: f64 = 1e-6;
/// RK4 step bound `h·ρ ≤ PGF_STEP_RHO` on both contour legs.
pub const PGF_STEP_RHO: f64 = 0.01;
/// Per-level amplified round-off budget defining the valid range.
pub const PGF_VALID_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult<D> {
    pub distribution: D,
    /// `‖ℒ p‖₁` (balance rows below the cap) or the last step change for iterations.
    pub residual: f64,
    pub iterations: usize,
}

/// Forward-iteration output with the first level whose values overflowed.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardIteration {
    pub result: StationaryResult<JointArray>,
    pub overflow_level: Option<usize>,
}

/// `‖ℒ_M p‖₁` over balance rows of levels `0..M−1`.
pub fn level_residual(model: &MatrixTelegraphModel, p: &JointArray) -> f64 {
    let n = model.hidden_states();
    let cap = p.cap();
    let lp = model.joint_generator(cap).apply(p.as_flat());
    lp[..n * cap].iter().map(|v| v.abs()).sum()
}

/// Normalized null vector of `𝐀 + 𝐁`; fails unless the null space is one-dimensional.
pub fn hidden_stationary(model: &MatrixTelegraphModel) -> Result<DVector<f64>> {
    null_vector(&(model.a() + model.b()))
}

fn null_vector(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = m.nrows();
    if n == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smax = svd.singular_values.max().max(f64::MIN_POSITIVE);
    if svd.singular_values[order[1]] <= 1e-12 * smax {
        return Err(Error::SeedFailure("null space of A+B is not one-dimensional".into()));
    }
    let v: DVector<f64> = v_t.row(order[0]).transpose();
    let s = v.sum();
    if s.abs() < 1e-300 {
        return Err(Error::SeedFailure("null vector has zero total mass".into()));
    }
    Ok(v / s)
}

fn smallest_right_singular(m: &DMatrix<f64>) -> DVector<f64> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let i = svd.singular_values.imin();
    v_t.row(i).transpose()
}

/// Backward block relations `P_m = 𝐑_m P_{m+1}`, terminal level by the smallest
/// right singular vector, then back-substitution and normalization.
pub fn block_thomas_stationary(model: &MatrixTelegraphModel, cap: usize) -> Result<StationaryResult<JointArray>> {
    if cap == 0 {
        return Err(Error::param("M", "must be at least 1"));
    }
    let n = model.hidden_states();
    let (a, b, mu) = (model.a(), model.b(), model.mu());
    let mut p = JointArray::zeros(n, cap);
    if b.iter().all(|&v| v == 0.0) {
        // No production: all mass at count 0 on the stationary law of 𝐀.
        let pi = null_vector(a)?;
        p.values_mut().column_mut(0).copy_from(&pi);
        let residual = level_residual(model, &p);
        return Ok(StationaryResult { distribution: p, residual, iterations: 0 });
    }
    let id = DMatrix::<f64>::identity(n, n);
    let mut r: Vec<DMatrix<f64>> = Vec::with_capacity(cap);
    let lu0 = LuFactor::new(a).map_err(|_| Error::SingularStage { level: 0 })?;
    r.push(lu0.solve_matrix(&id) * (-mu));
    for m in 1..cap {
        let stage = b * &r[m - 1] + a - &id * (mu * m as f64);
        let lu = LuFactor::new(&stage).map_err(|_| Error::SingularStage { level: m })?;
        r.push(lu.solve_matrix(&id) * (-mu * (m + 1) as f64));
    }
    let terminal = b * &r[cap - 1] + a - &id * (mu * cap as f64);
    let mut next = smallest_right_singular(&terminal);
    p.values_mut().column_mut(cap).copy_from(&next);
    for m in (0..cap).rev() {
        next = &r[m] * next;
        p.values_mut().column_mut(m).copy_from(&next);
    }
    let total = p.sum();
    if !(total.is_finite() && total != 0.0) {
        return Err(Error::SingularStage { level: cap });
    }
    *p.values_mut() /= total;
    let residual = level_residual(model, &p);
    Ok(StationaryResult { distribution: p, residual, iterations: cap })
}

/// Forward parameterization `P_m = 𝐋_m P_0` with
/// `𝐋_{m+1} = ((μm·I − 𝐀)𝐋_m − 𝐁𝐋_{m−1}) / (μ(m+1))` and `(Σ_m 𝐋_m) P_0 = π`.
///
/// Round-off in `𝐋_m` grows without bound; kept as a diagnostic.
pub fn forward_iteration_stationary(model: &MatrixTelegraphModel, cap: usize) -> Result<ForwardIteration> {
    let n = model.hidden_states();
    let (a, b, mu) = (model.a(), model.b(), model.mu());
    let id = DMatrix::<f64>::identity(n, n);
    let mut ls: Vec<DMatrix<f64>> = vec![id.clone()];
    let mut overflow_level = None;
    for m in 0..cap {
        let mut next = (&id * (mu * m as f64) - a) * &ls[m];
        if m > 0 {
            next -= b * &ls[m - 1];
        }
        next /= mu * (m + 1) as f64;
        if next.iter().any(|v| !v.is_finite()) {
            overflow_level = Some(m + 1);
            break;
        }
        ls.push(next);
    }
    let total = ls.iter().fold(DMatrix::zeros(n, n), |acc, l| acc + l);
    let pi = hidden_stationary(model)?;
    let p0 = LuFactor::new(&total).map(|lu| lu.solve_matrix(&DMatrix::from_column_slice(n, 1, pi.as_slice())));
    let mut p = JointArray::zeros(n, cap);
    if let Ok(p0) = p0 {
        for (m, l) in ls.iter().enumerate() {
            let col = l * &p0;
            if col.iter().all(|v| v.is_finite()) {
                p.values_mut().column_mut(m).copy_from(&col.column(0));
            } else if overflow_level.is_none() {
                overflow_level = Some(m);
            }
        }
    } else if overflow_level.is_none() {
        overflow_level = Some(ls.len());
    }
    let residual = level_residual(model, &p);
    Ok(ForwardIteration {
        result: StationaryResult { distribution: p, residual, iterations: ls.len() - 1 },
        overflow_level,
    })
}

/// Largest `m` with `r^{−m}·ε_mach < 1e−10`.
pub fn pgf_valid_range(radius: f64) -> usize {
    ((PGF_VALID_FLOOR / f64::EPSILON).ln() / (1.0 / radius).ln()).floor().max(0.0) as usize
}

pub fn pgf_default_nodes(cap: usize) -> usize {
    (4 * (cap + 1)).next_power_of_two()
}

fn cmatvec(a: &DMatrix<f64>, b: &DMatrix<f64>, z: Complex64, x: &[Complex64], scale: Complex64, out: &mut [Complex64]) {
    let n = x.len();
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += (z * b[(i, j)] + a[(i, j)]) * x[j];
        }
        out[i] = acc * scale;
    }
}

fn rk4_complex(f: &dyn Fn(f64, &[Complex64], &mut [Complex64]), y: &mut [Complex64], s0: f64, h: f64) {
    let n = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![Complex64::default(); n],
        vec![Complex64::default(); n],
        vec![Complex64::default(); n],
        vec![Complex64::default(); n],
    );
    let mut tmp = vec![Complex64::default(); n];
    f(s0, y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + k1[i] * (0.5 * h);
    }
    f(s0 + 0.5 * h, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + k2[i] * (0.5 * h);
    }
    f(s0 + 0.5 * h, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + k3[i] * h;
    }
    f(s0 + h, &tmp, &mut k4);
    for i in 0..n {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
}

fn op_norm2(m: &DMatrix<f64>) -> f64 {
    if m.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Contour extraction of the stationary generating vector.
///
/// Seed `Z(1−ε) = Z(1) − ε Z'(1)` with `Z(1)` the null vector of `𝐀+𝐁` and
/// `Z'(1) = −(𝐀+𝐁−μI)^{−1}𝐁 Z(1)`; RK4 in `s = ln(1−z)` out to `z = r`, RK4
/// along the upper half of `|z| = r` sampling `Q` nodes, then FFT and `r^{−m}` scaling. Mass
/// comes from the seed; no renormalization over `m` is applied.
pub fn pgf_fft_stationary(
    model: &MatrixTelegraphModel,
    cap: usize,
    radius: f64,
    nodes: usize,
) -> Result<StationaryResult<JointArray>> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::param("r", "contour radius must lie in (0, 1)"));
    }
    if !nodes.is_power_of_two() || nodes < 2 * (cap + 1) {
        return Err(Error::param("Q", "must be a power of two ≥ 2(M+1)"));
    }
    let n = model.hidden_states();
    let (a, b, mu) = (model.a(), model.b(), model.mu());
    let z1 = hidden_stationary(model)?;
    let shifted = a + b - DMatrix::<f64>::identity(n, n) * mu;
    let d1 = LuFactor::new(&shifted)
        .map_err(|e| Error::SeedFailure(format!("A+B−μI: {e}")))?
        .solve_matrix(&DMatrix::from_column_slice(n, 1, (b * &z1).as_slice()))
        * -1.0;
    let eps = PGF_SEED_OFFSET;
    let mut z: Vec<Complex64> = (0..n).map(|i| Complex64::new(z1[i] - eps * d1[(i, 0)], 0.0)).collect();
    let (na, nb) = (op_norm2(a), op_norm2(b));

    // Real segment in s = ln(1−z): dZ/ds = (𝐀 + (1−e^s)𝐁) Z / μ.
    let (s0, s1) = (eps.ln(), (1.0 - radius).ln());
    let seg = |s: f64, y: &[Complex64], out: &mut [Complex64]| {
        let zz = Complex64::new(-s.exp_m1(), 0.0);
        cmatvec(a, b, zz, y, Complex64::new(1.0 / mu, 0.0), out);
    };
    let steps = (((s1 - s0) * (na + nb) / (mu * PGF_STEP_RHO)).ceil() as usize).max(1);
    let h = (s1 - s0) / steps as f64;
    for k in 0..steps {
        rk4_complex(&seg, &mut z, s0 + k as f64 * h, h);
    }

    // Circle: dZ/dθ = −i z (𝐀 + z𝐁) Z / (μ(1−z)), z = r e^{iθ}. Only θ ∈ [0, π] is
    // swept: |1−z| grows along it, so modes singular at z = 1 decay instead of
    // being re-amplified on the way back. Real 𝐀, 𝐁 give Z(z̄) = conj Z(z).
    let arc = |th: f64, y: &[Complex64], out: &mut [Complex64]| {
        let zz = Complex64::from_polar(radius, th);
        let scale = -Complex64::i() * zz / ((Complex64::new(1.0, 0.0) - zz) * mu);
        cmatvec(a, b, zz, y, scale, out);
    };
    let rho = (na + radius * nb) * radius / (mu * (1.0 - radius));
    let dth = 2.0 * std::f64::consts::PI / nodes as f64;
    let sub = ((dth * rho / PGF_STEP_RHO).ceil() as usize).max(1);
    let h = dth / sub as f64;
    let mut samples = vec![vec![Complex64::default(); nodes]; n];
    let half = nodes / 2;
    for q in 0..=half {
        for (i, s) in samples.iter_mut().enumerate() {
            s[q] = z[i];
        }
        if q < half {
            for k in 0..sub {
                rk4_complex(&arc, &mut z, q as f64 * dth + k as f64 * h, h);
            }
        }
    }
    for s in samples.iter_mut() {
        for q in half + 1..nodes {
            s[q] = s[nodes - q].conj();
        }
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nodes);
    let mut p = JointArray::zeros(n, cap);
    for (i, s) in samples.iter_mut().enumerate() {
        fft.process(s);
        let mut scale = 1.0 / nodes as f64;
        for m in 0..=cap {
            p.values_mut()[(i, m)] = s[m].re * scale;
            scale /= radius;
        }
    }
    if p.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("contour coefficients"));
    }
    let residual = level_residual(model, &p);
    Ok(StationaryResult { distribution: p, residual, iterations: steps + half * sub })
}

fn normalize(p: &mut [f64]) -> Result<()> {
    let s: f64 = p.iter().sum();
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::NonFinite("power-iteration mass"));
    }
    p.iter_mut().for_each(|v| *v /= s);
    Ok(())
}

/// Iterates `p ← normalize(S p)` until the ℓ¹ change drops below `tol`.
///
/// `iterations` counts the updates that changed `p` by at least `tol`.
pub fn power_iteration_stationary(
    step: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    p0: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<StationaryResult<Vec<f64>>> {
    let mut p = p0.to_vec();
    normalize(&mut p)?;
    let mut change = f64::INFINITY;
    for it in 0..=max_iters {
        let mut next = step(&p)?;
        normalize(&mut next)?;
        change = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = next;
        if change < tol {
            return Ok(StationaryResult { distribution: p, residual: change, iterations: it });
        }
    }
    Err(Error::NoConvergence { iterations: max_iters, residual: change })
}

/// One closure-Strang step on the hybrid model's box.
pub fn hybrid_step_map<'a>(
    model: &'a HybridModel,
    dt: f64,
    inner: InnerEngine,
) -> Result<impl FnMut(&[f64]) -> Result<Vec<f64>> + 'a> {
    let cap = model.cap();
    let kernels =
        model.affine().iter().map(|g| affine_window_propagator(g, cap, dt / 2.0)).collect::<Result<Vec<_>>>()?;
    let mut full = remainder_propagator(model.remainder(), dt, inner)?;
    Ok(move |x: &[f64]| {
        let h = apply_mode_wise(&kernels, cap, x);
        let r = full.apply(&h)?;
        Ok(apply_mode_wise(&kernels, cap, &r))
    })
}

/// Power iteration on the closure-Strang map at `dt` and at `dt/2`, combined
/// as `(4 x_{dt/2} − x_dt)/3`.
#[derive(Debug, Clone, PartialEq)]
pub struct RichardsonStationary {
    pub coarse: StationaryResult<TensorWindow>,
    pub fine: StationaryResult<TensorWindow>,
    pub combined: TensorWindow,
}

pub fn closure_strang_stationary(
    model: &HybridModel,
    dt: f64,
    tol: f64,
    max_iters: usize,
    inner: InnerEngine,
) -> Result<StationaryResult<TensorWindow>> {
    let (k, cap) = (model.species(), model.cap());
    let len = model.joint_dim();
    let p0 = vec![1.0 / len as f64; len];
    let mut step = hybrid_step_map(model, dt, inner)?;
    let r = power_iteration_stationary(&mut step, &p0, tol, max_iters)?;
    Ok(StationaryResult {
        distribution: TensorWindow::from_vec(k, cap, r.distribution)?,
        residual: r.residual,
        iterations: r.iterations,
    })
}

pub fn closure_strang_stationary_richardson(
    model: &HybridModel,
    dt: f64,
    tol: f64,
    max_iters: usize,
    inner: InnerEngine,
) -> Result<RichardsonStationary> {
    let coarse = closure_strang_stationary(model, dt, tol, max_iters, inner)?;
    let fine = closure_strang_stationary(model, dt / 2.0, tol, max_iters, inner)?;
    let combined = richardson_combine(&coarse.distribution, &fine.distribution, 2)?;
    Ok(RichardsonStationary { coarse, fine, combined })
}
