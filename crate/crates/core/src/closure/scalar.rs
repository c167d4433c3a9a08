use std::cell::RefCell;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::generators::{polynomials_of, LinearRateGenerator, PolynomialPair};
use crate::integrators::{rk45_solve_with, OdeProblem, Rk45Options, StepStats};
use crate::series::{cauchy_product_into, FftWorkspace, ProductBackend, SeriesWindow};

pub const DEFAULT_BLOWUP_GUARD: f64 = 1e12;

/// Coefficients of the characteristic `Φ_t` and multiplier `K_t` on `{0..N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureState {
    pub phi: SeriesWindow,
    pub kappa: SeriesWindow,
    pub t: f64,
}

impl ClosureState {
    /// `φ = δ_1`, `κ = δ_0` at `t = 0`.
    pub fn initial(cap: usize) -> Self {
        let mut phi = SeriesWindow::zeros(cap);
        if cap >= 1 {
            phi.coeffs_mut()[1] = 1.0;
        }
        Self { phi, kappa: SeriesWindow::monomial(cap, 0), t: 0.0 }
    }

    pub fn cap(&self) -> usize {
        self.phi.cap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureOptions {
    pub rtol: f64,
    pub atol: f64,
    pub guard: f64,
    pub backend: ProductBackend,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-15, guard: DEFAULT_BLOWUP_GUARD, backend: ProductBackend::Direct }
    }
}

impl ClosureOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { rtol, ..Default::default() }
    }
}

/// Truncated series arithmetic for one polynomial pair at a fixed cap.
pub(crate) struct ClosureRhs {
    a: Vec<f64>,
    b: Vec<f64>,
    cap: usize,
    backend: ProductBackend,
    scratch: RefCell<(Vec<f64>, Vec<f64>, FftWorkspace)>,
}

impl ClosureRhs {
    pub(crate) fn new(pair: &PolynomialPair, cap: usize, backend: ProductBackend) -> Self {
        Self {
            a: pair.a.coeffs().to_vec(),
            b: pair.b.coeffs().to_vec(),
            cap,
            backend,
            scratch: RefCell::new((vec![0.0; cap + 1], vec![0.0; cap + 1], FftWorkspace::new())),
        }
    }

    pub(crate) fn has_source(&self) -> bool {
        self.b.iter().any(|&c| c != 0.0)
    }

    fn product(&self, ws: &mut FftWorkspace, x: &[f64], y: &[f64], out: &mut [f64]) {
        match self.backend {
            ProductBackend::Direct => cauchy_product_into(x, y, out),
            ProductBackend::Fft => ws.product_into(x, y, out),
        }
    }

    /// `out = Σ_k c_k Φ^k` by Horner, truncated at the cap.
    fn compose(&self, c: &[f64], phi: &[f64], out: &mut [f64], tmp: &mut [f64], ws: &mut FftWorkspace) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let Some((&lead, rest)) = c.split_last() else { return };
        out[0] = lead;
        for &ck in rest.iter().rev() {
            self.product(ws, out, phi, tmp);
            out.copy_from_slice(tmp);
            out[0] += ck;
        }
    }

    /// `φ̇ = A(Φ)`; when `kappa` is given also `κ̇ = B(Φ)·K`.
    pub(crate) fn eval(&self, phi: &[f64], kappa: Option<&[f64]>, dphi: &mut [f64], dkappa: Option<&mut [f64]>) {
        debug_assert_eq!(phi.len(), self.cap + 1);
        let mut guard = self.scratch.borrow_mut();
        let (tmp, bphi, ws) = &mut *guard;
        self.compose(&self.a, phi, dphi, tmp, ws);
        if let (Some(k), Some(dk)) = (kappa, dkappa) {
            self.compose(&self.b, phi, bphi, tmp, ws);
            self.product(ws, bphi, k, dk);
        }
    }
}

/// `(φ̇, κ̇)` at the given state. Level `n` of either output reads levels `≤ n` only.
pub fn closure_rhs(state: &ClosureState, pair: &PolynomialPair) -> Result<(SeriesWindow, SeriesWindow)> {
    let cap = state.cap();
    if state.kappa.cap() != cap {
        return Err(Error::CapMismatch { left: cap, right: state.kappa.cap() });
    }
    let rhs = ClosureRhs::new(pair, cap, ProductBackend::Direct);
    let mut dphi = SeriesWindow::zeros(cap);
    let mut dkappa = SeriesWindow::zeros(cap);
    rhs.eval(state.phi.coeffs(), Some(state.kappa.coeffs()), dphi.coeffs_mut(), Some(dkappa.coeffs_mut()));
    Ok((dphi, dkappa))
}

pub fn integrate_closure(gen: &LinearRateGenerator, cap: usize, t: f64, rtol: f64) -> Result<ClosureState> {
    integrate_closure_with(gen, cap, t, &ClosureOptions::with_rtol(rtol)).map(|(s, _)| s)
}

/// Integrates the closed coefficient ODE from `φ = δ_1`, `κ = δ_0` to time `t`.
pub fn integrate_closure_with(
    gen: &LinearRateGenerator,
    cap: usize,
    t: f64,
    opts: &ClosureOptions,
) -> Result<(ClosureState, StepStats)> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", "must be finite and nonnegative"));
    }
    let init = ClosureState::initial(cap);
    if t == 0.0 {
        return Ok((init, StepStats::default()));
    }
    let pair = polynomials_of(gen);
    let rhs = ClosureRhs::new(&pair, cap, opts.backend);
    let n = cap + 1;
    let with_kappa = rhs.has_source();
    let mut y0 = init.phi.coeffs().to_vec();
    if with_kappa {
        y0.extend_from_slice(init.kappa.coeffs());
    }
    let problem = OdeProblem::new(
        |_, y: &[f64], dy: &mut [f64]| {
            if with_kappa {
                let (phi, kappa) = y.split_at(n);
                let (dphi, dkappa) = dy.split_at_mut(n);
                rhs.eval(phi, Some(kappa), dphi, Some(dkappa));
            } else {
                rhs.eval(y, None, dy, None);
            }
        },
        y0,
        0.0,
        t,
    );
    let ode_opts = Rk45Options { rtol: opts.rtol, atol: opts.atol, guard: Some(opts.guard), ..Default::default() };
    let (y, stats) = rk45_solve_with(&problem, &ode_opts)?;
    let phi = SeriesWindow::new(y[..n].to_vec())?;
    let kappa = if with_kappa { SeriesWindow::new(y[n..].to_vec())? } else { init.kappa };
    Ok((ClosureState { phi, kappa, t }, stats))
}

/// Column `m` holds the coefficients of `K_t(z) Φ_t(z)^m` on `{0..N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionKernel {
    pub matrix: DMatrix<f64>,
}

impl CompositionKernel {
    pub fn cap(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn ancestors(&self) -> usize {
        self.matrix.ncols() - 1
    }

    /// `P_n = Σ_m π_m T_{n,m}`; entries of `init` beyond the kernel width must vanish.
    pub fn apply(&self, init: &[f64]) -> Result<Vec<f64>> {
        let m0 = self.ancestors();
        if init.iter().skip(m0 + 1).any(|&v| v != 0.0) {
            return Err(Error::InvalidArgument(format!("initial support exceeds the kernel width {m0}")));
        }
        let mut out = vec![0.0; self.cap() + 1];
        for (m, &w) in init.iter().enumerate().take(m0 + 1) {
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(self.matrix.column(m).iter()) {
                    *o += w * v;
                }
            }
        }
        Ok(out)
    }
}

pub fn composition_kernel(state: &ClosureState, m0: usize) -> CompositionKernel {
    composition_kernel_with(state, m0, ProductBackend::Direct)
}

pub fn composition_kernel_with(state: &ClosureState, m0: usize, backend: ProductBackend) -> CompositionKernel {
    let n = state.cap() + 1;
    let mut matrix = DMatrix::zeros(n, m0 + 1);
    let mut col = state.kappa.coeffs().to_vec();
    let mut next = vec![0.0; n];
    let mut ws = FftWorkspace::new();
    for m in 0..=m0 {
        if m > 0 {
            match backend {
                ProductBackend::Direct => cauchy_product_into(&col, state.phi.coeffs(), &mut next),
                ProductBackend::Fft => ws.product_into(&col, state.phi.coeffs(), &mut next),
            }
            std::mem::swap(&mut col, &mut next);
        }
        matrix.column_mut(m).copy_from_slice(&col);
    }
    CompositionKernel { matrix }
}

pub fn closure_solve(gen: &LinearRateGenerator, init: &SeriesWindow, cap: usize, t: f64) -> Result<SeriesWindow> {
    closure_solve_with(gen, init, cap, t, &ClosureOptions::default()).map(|(p, _)| p)
}

/// In-window coefficients `x_0..x_N` at time `t` from initial data `init`.
pub fn closure_solve_with(
    gen: &LinearRateGenerator,
    init: &SeriesWindow,
    cap: usize,
    t: f64,
    opts: &ClosureOptions,
) -> Result<(SeriesWindow, StepStats)> {
    let m0 = init.support_end().unwrap_or(0);
    let (state, stats) = integrate_closure_with(gen, cap, t, opts)?;
    let kernel = composition_kernel_with(&state, m0, opts.backend);
    let out = kernel.apply(&init.coeffs()[..=m0])?;
    Ok((SeriesWindow::new(out)?, stats))
}

/// `p_0`, `p_1` and ratio `ρ` of the single-ancestor birth–death law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricTail {
    pub p0: f64,
    pub p1: f64,
    pub rho: f64,
}

/// Closed form without cancellation: with `d = μ − λ` and
/// `s = (1 − e^{−dt})/d` (`s = t` at `d = 0`),
/// `p0 = μs/(1+λs)`, `ρ = λs/(1+λs)`, `p1 = e^{−dt}/(1+λs)²`.
pub fn bd_tail_parameters(lambda: f64, mu: f64, t: f64) -> Result<GeometricTail> {
    for (name, v) in [("lambda", lambda), ("mu", mu), ("t", t)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::param(name, "must be finite and nonnegative"));
        }
    }
    if lambda == 0.0 {
        // Pure death: single-particle survival.
        let e = (-mu * t).exp();
        return Ok(GeometricTail { p0: -(-mu * t).exp_m1(), p1: e, rho: 0.0 });
    }
    if mu == 0.0 {
        // Yule: geometric with success probability e^{−λt}, no extinction.
        let e = (-lambda * t).exp();
        return Ok(GeometricTail { p0: 0.0, p1: e, rho: -(-lambda * t).exp_m1() });
    }
    let d = mu - lambda;
    let s = if d == 0.0 { t } else { -(-d * t).exp_m1() / d };
    let q = 1.0 + lambda * s;
    Ok(GeometricTail { p0: mu * s / q, p1: (-d * t).exp() / (q * q), rho: lambda * s / q })
}

pub fn bd_extinction_probability(lambda: f64, mu: f64, t: f64) -> Result<f64> {
    bd_tail_parameters(lambda, mu, t).map(|g| g.p0)
}

/// `p_n(t) = p_1 ρ^{n−1}` for one initial particle.
pub fn bd_geometric_tail(lambda: f64, mu: f64, t: f64, cap: usize) -> Result<SeriesWindow> {
    let g = bd_tail_parameters(lambda, mu, t)?;
    let mut p = vec![0.0; cap + 1];
    p[0] = g.p0;
    let mut v = g.p1;
    for x in p.iter_mut().skip(1) {
        *x = v;
        v *= g.rho;
    }
    SeriesWindow::new(p)
}

/// `ln p_n`, finite where the direct tail would underflow.
pub fn bd_geometric_tail_log(lambda: f64, mu: f64, t: f64, cap: usize) -> Result<Vec<f64>> {
    let g = bd_tail_parameters(lambda, mu, t)?;
    let (lp1, lrho) = (g.p1.ln(), g.rho.ln());
    Ok((0..=cap)
        .map(|n| match n {
            0 => g.p0.ln(),
            1 => lp1,
            _ => lp1 + (n - 1) as f64 * lrho,
        })
        .collect())
}
