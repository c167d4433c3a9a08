//! Solver catalog. Every solver returns the flat in-window output in the
//! ordering of the model's truncated joint generator.

use linrate::baselines::{dense_expm_action, dense_stationary, truncated_direct_solve, uniformization_solve};
use linrate::closure::{
    apply_multiplier, bd_geometric_tail, closure_richardson_solve, closure_solve_with,
    integrate_matrix_multiplier_adaptive, matrix_closure_solve, purebd_richardson_solve, purebd_strang_solve,
    ClosureOptions, JointArray,
};
use linrate::generators::truncate_generator;
use linrate::perturbation::perturbation_series;
use linrate::splitting::{
    hybrid_richardson_solve, hybrid_strang_solve, InnerEngine, DEFAULT_INNER_ATOL, DEFAULT_INNER_RTOL,
    DEFAULT_UNIFORMIZATION_TOL,
};
use linrate::stationary::{
    block_thomas_stationary, closure_strang_stationary, closure_strang_stationary_richardson,
    forward_iteration_stationary, pgf_default_nodes, pgf_fft_stationary, PGF_DEFAULT_RADIUS,
};
use linrate::{Error, Model, SeriesWindow, SparseOperator, TensorWindow};

use crate::config::{InnerName, Mode, Point, SolverSpec};

pub const DEFAULT_K_S: usize = 20;
pub const DEFAULT_INNER_STEPS: usize = 50;
pub const DEFAULT_TOL: f64 = 1e-14;
pub const DEFAULT_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutput {
    pub window: Vec<f64>,
    pub steps: Option<usize>,
    pub iterations: Option<usize>,
}

impl SolverOutput {
    fn plain(window: Vec<f64>) -> Self {
        Self { window, steps: None, iterations: None }
    }
}

pub fn available(kind: &str, mode: Mode) -> &'static [&'static str] {
    match (kind, mode) {
        ("linear", Mode::Transient) => &["closure", "closed_form", "dense", "uniformization", "direct"],
        ("hybrid", Mode::Transient) => &["dense", "uniformization", "direct", "strang", "richardson", "perturbation"],
        ("telegraph", Mode::Transient) => {
            &["closure", "closure_richardson", "strang", "richardson", "dense", "uniformization", "direct"]
        }
        ("linear", Mode::Stationary) => &["dense"],
        ("hybrid", Mode::Stationary) => &["dense", "closure_strang", "closure_strang_richardson"],
        ("telegraph", Mode::Stationary) => &["dense", "block_thomas", "pgf_fft", "forward"],
        _ => &[],
    }
}

pub fn allowed_options(solver: &str) -> &'static [&'static str] {
    match solver {
        "closure" => &["rtol", "S"],
        "closure_richardson" => &["S"],
        "dense" => &["pad"],
        "uniformization" => &["tol", "pad"],
        "direct" => &["rtol", "pad"],
        "strang" | "richardson" => &["K_s", "inner_steps"],
        "perturbation" => &["Kp", "subintervals"],
        "closure_strang" | "closure_strang_richardson" => &["dt", "tol", "max_iters"],
        "pgf_fft" => &["radius", "nodes"],
        _ => &[],
    }
}

fn real(spec: &SolverSpec, key: &str, default: f64) -> f64 {
    spec.options.get(key).copied().unwrap_or(default)
}

fn count(spec: &SolverSpec, key: &str, default: usize, min: usize) -> linrate::Result<usize> {
    match spec.options.get(key) {
        None => Ok(default),
        Some(&v) if v.fract() == 0.0 && v >= min as f64 => Ok(v as usize),
        Some(&v) => Err(Error::InvalidArgument(format!("option {key} = {v} must be an integer ≥ {min}"))),
    }
}

fn inner(spec: &SolverSpec) -> InnerEngine {
    match spec.inner.unwrap_or_default() {
        InnerName::Auto => InnerEngine::Auto,
        InnerName::Rosenbrock => InnerEngine::Rosenbrock { rtol: DEFAULT_INNER_RTOL, atol: DEFAULT_INNER_ATOL },
        InnerName::Uniformization => InnerEngine::Uniformization { tol: DEFAULT_UNIFORMIZATION_TOL },
        InnerName::DenseExpm => InnerEngine::DenseExpm,
    }
}

fn delta(len: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[at] = 1.0;
    v
}

fn check_initial(point: &Point, bounds: &[usize]) -> linrate::Result<()> {
    for (&i, &b) in point.initial.iter().zip(bounds) {
        if i > b {
            return Err(Error::InvalidArgument(format!("initial state {:?} lies outside the window", point.initial)));
        }
    }
    Ok(())
}

/// Truncation baseline on the window padded by `pad` levels, cut back to the window.
fn truncation_baseline(
    spec: &SolverSpec,
    point: &Point,
    op: SparseOperator,
    p0: Vec<f64>,
    window: usize,
) -> linrate::Result<SolverOutput> {
    let mut out = match spec.name.as_str() {
        "dense" => SolverOutput::plain(dense_expm_action(&op, &p0, point.t)?),
        "uniformization" => {
            SolverOutput::plain(uniformization_solve(&op, &p0, point.t, real(spec, "tol", DEFAULT_TOL))?)
        }
        "direct" => {
            let (p, stats) = truncated_direct_solve(&op, &p0, point.t, real(spec, "rtol", DEFAULT_RTOL))?;
            SolverOutput { window: p, steps: Some(stats.accepted), iterations: None }
        }
        other => unreachable!("`{other}` is not a truncation baseline"),
    };
    out.window.truncate(window);
    Ok(out)
}

pub fn solve(point: &Point, spec: &SolverSpec) -> linrate::Result<SolverOutput> {
    let out = match point.mode {
        Mode::Transient => transient(point, spec)?,
        Mode::Stationary => stationary(point, spec)?,
    };
    if out.window.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("solver output"));
    }
    Ok(out)
}

fn transient(point: &Point, spec: &SolverSpec) -> linrate::Result<SolverOutput> {
    let (cap, t, name) = (point.cap, point.t, spec.name.as_str());
    let k_s = match point.k_s {
        Some(k) => k,
        None => count(spec, "K_s", DEFAULT_K_S, 1)?,
    };
    match &point.model {
        Model::Linear(g) => {
            let n0 = point.initial[0];
            check_initial(point, &[cap])?;
            match name {
                "closure" => {
                    let opts = ClosureOptions::with_rtol(real(spec, "rtol", ClosureOptions::default().rtol));
                    let (p, stats) = closure_solve_with(g, &SeriesWindow::monomial(cap, n0), cap, t, &opts)?;
                    Ok(SolverOutput { window: p.into_vec(), steps: Some(stats.accepted), iterations: None })
                }
                "closed_form" => closed_form(point, g).map(SolverOutput::plain),
                _ => {
                    let big = cap + count(spec, "pad", 0, 0)?;
                    truncation_baseline(spec, point, truncate_generator(g, big), delta(big + 1, n0), cap + 1)
                }
            }
        }
        Model::Hybrid(h) => {
            check_initial(point, &vec![cap; h.species()])?;
            if spec.options.contains_key("pad") {
                return Err(Error::InvalidArgument("hybrid models fix the box through their `N` parameter".into()));
            }
            let p0 = TensorWindow::delta(h.species(), cap, &point.initial);
            match name {
                "strang" => {
                    let p = hybrid_strang_solve(h, &p0, t, k_s, inner(spec))?;
                    Ok(SolverOutput { window: p.into_vec(), steps: Some(k_s), iterations: None })
                }
                "richardson" => {
                    let p = hybrid_richardson_solve(h, &p0, t, k_s, inner(spec))?;
                    Ok(SolverOutput { window: p.into_vec(), steps: Some(3 * k_s), iterations: None })
                }
                "perturbation" => {
                    if h.species() != 1 {
                        return Err(Error::InvalidArgument("perturbation needs a single-species model".into()));
                    }
                    let order = count(spec, "Kp", 1, 0)?;
                    let panels = count(spec, "subintervals", 40, 2)?;
                    // The remainder already carries ε, so the series is summed at unit weight.
                    let s = perturbation_series(
                        &h.affine()[0],
                        h.remainder(),
                        &SeriesWindow::new(p0.into_vec())?,
                        order,
                        t,
                        panels,
                    )?;
                    Ok(SolverOutput {
                        window: s.evaluate(1.0, order)?.into_vec(),
                        steps: Some(panels),
                        iterations: None,
                    })
                }
                _ => {
                    let len = h.joint_dim();
                    truncation_baseline(spec, point, h.full_operator(), p0.into_vec(), len)
                }
            }
        }
        Model::Telegraph(m) => {
            let n = m.hidden_states();
            check_initial(point, &[n - 1, cap])?;
            let (a0, m0) = (point.initial[0], point.initial[1]);
            let mut init = JointArray::zeros(n, cap);
            init.values_mut()[(a0, m0)] = 1.0;
            let inner_steps = count(spec, "inner_steps", DEFAULT_INNER_STEPS, 1)?;
            let (p, steps) = match name {
                "closure" if spec.options.contains_key("S") => {
                    let s = count(spec, "S", 1, 1)?;
                    (matrix_closure_solve(m, &init, cap, t, s)?, s)
                }
                "closure" => {
                    let rtol = real(spec, "rtol", DEFAULT_RTOL);
                    let (state, stats) = integrate_matrix_multiplier_adaptive(m, cap, t, rtol, rtol * 1e-4)?;
                    (apply_multiplier(&state, &init)?, stats.accepted)
                }
                "closure_richardson" => {
                    let s = count(spec, "S", 100, 1)?;
                    (closure_richardson_solve(m, &init, cap, t, s)?, 3 * s)
                }
                "strang" => (purebd_strang_solve(m, &init, cap, t, k_s, inner_steps)?, k_s),
                "richardson" => (purebd_richardson_solve(m, &init, cap, t, k_s, inner_steps)?, 3 * k_s),
                _ => {
                    let big = cap + count(spec, "pad", 0, 0)?;
                    let p0 = delta(n * (big + 1), m0 * n + a0);
                    return truncation_baseline(spec, point, m.joint_generator(big), p0, n * (cap + 1));
                }
            };
            Ok(SolverOutput { window: p.as_flat().to_vec(), steps: Some(steps), iterations: None })
        }
    }
}

/// Geometric tail for `binary_bd` from one ancestor; Poisson law for
/// `mm_inf` and `signed_mm_inf` from the empty state.
fn closed_form(point: &Point, g: &linrate::LinearRateGenerator) -> linrate::Result<Vec<f64>> {
    let (cap, t) = (point.cap, point.t);
    match (point.name.as_str(), point.initial[0]) {
        ("binary_bd", 1) => Ok(bd_geometric_tail(g.rate(1).alpha, g.rate(-1).alpha, t, cap)?.into_vec()),
        ("mm_inf" | "signed_mm_inf", 0) => {
            let mu = g.rate(-1).alpha;
            let mean = g.rate(1).beta / mu * -(-mu * t).exp_m1();
            let mut p = Vec::with_capacity(cap + 1);
            let mut v = (-mean).exp();
            for n in 0..=cap {
                p.push(v);
                v *= mean / (n + 1) as f64;
            }
            Ok(p)
        }
        (name, n0) => Err(Error::InvalidArgument(format!("no closed form for `{name}` from initial state {n0}"))),
    }
}

fn stationary(point: &Point, spec: &SolverSpec) -> linrate::Result<SolverOutput> {
    let cap = point.cap;
    match (&point.model, spec.name.as_str()) {
        (Model::Linear(g), _) => Ok(SolverOutput::plain(dense_stationary(&truncate_generator(g, cap))?)),
        (Model::Hybrid(h), "closure_strang") => {
            let r = closure_strang_stationary(
                h,
                real(spec, "dt", 0.1),
                real(spec, "tol", 1e-12),
                count(spec, "max_iters", 100_000, 1)?,
                inner(spec),
            )?;
            Ok(SolverOutput { window: r.distribution.into_vec(), steps: None, iterations: Some(r.iterations) })
        }
        (Model::Hybrid(h), "closure_strang_richardson") => {
            let r = closure_strang_stationary_richardson(
                h,
                real(spec, "dt", 0.1),
                real(spec, "tol", 1e-12),
                count(spec, "max_iters", 100_000, 1)?,
                inner(spec),
            )?;
            let iterations = r.coarse.iterations + r.fine.iterations;
            Ok(SolverOutput { window: r.combined.into_vec(), steps: None, iterations: Some(iterations) })
        }
        (Model::Hybrid(h), _) => Ok(SolverOutput::plain(dense_stationary(&h.full_operator())?)),
        (Model::Telegraph(m), name) => {
            let r = match name {
                "block_thomas" => block_thomas_stationary(m, cap)?,
                "pgf_fft" => {
                    let nodes = count(spec, "nodes", pgf_default_nodes(cap), 1)?;
                    pgf_fft_stationary(m, cap, real(spec, "radius", PGF_DEFAULT_RADIUS), nodes)?
                }
                "forward" => forward_iteration_stationary(m, cap)?.result,
                _ => return Ok(SolverOutput::plain(dense_stationary(&m.joint_generator(cap))?)),
            };
            Ok(SolverOutput { window: r.distribution.as_flat().to_vec(), steps: None, iterations: Some(r.iterations) })
        }
    }
}
