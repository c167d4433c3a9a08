use super::{check_tolerances, error_norm, initial_step, OdeProblem, StepStats};
use crate::error::{Error, Result};

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Step-control constants (Hairer–Nørsett–Wanner PI controller).
pub const SAFETY: f64 = 0.9;
pub const FAC_MIN: f64 = 0.2;
pub const FAC_MAX: f64 = 10.0;
pub const PI_BETA: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk45Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen heuristically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    /// Abort with [`Error::CharacteristicBlowUp`] once any `|y_i|` exceeds this.
    pub guard: Option<f64>,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, h0: None, h_max: f64::INFINITY, max_steps: 1_000_000, guard: None }
    }
}

pub fn rk45_solve(p: &OdeProblem, rtol: f64, atol: f64) -> Result<(Vec<f64>, StepStats)> {
    rk45_solve_with(p, &Rk45Options { rtol, atol, ..Default::default() })
}

pub fn rk45_solve_with(p: &OdeProblem, opts: &Rk45Options) -> Result<(Vec<f64>, StepStats)> {
    check_tolerances(opts.rtol, opts.atol)?;
    let n = p.dim();
    let mut stats = StepStats::default();
    let mut y = p.y0.clone();
    let span = p.t1 - p.t0;
    if span == 0.0 || n == 0 {
        return Ok((y, stats));
    }
    if span < 0.0 {
        return Err(Error::InvalidArgument("rk45 integrates forward in time only".into()));
    }
    let f = &p.rhs;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];

    let mut t = p.t0;
    f(t, &y, &mut k[0]);
    stats.rhs_evals += 1;
    let mut h = match opts.h0 {
        Some(h) => h,
        None => initial_step(p, &y, &k[0], opts.rtol, opts.atol, 4, &mut stats),
    }
    .min(opts.h_max)
    .min(span);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    while t < p.t1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::IntegrationFailure { t, reason: "step budget exhausted".into(), stats });
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(span) {
            return Err(Error::IntegrationFailure { t, reason: "step size underflow".into(), stats });
        }
        let last = t + h >= p.t1;
        if last {
            h = p.t1 - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                stage[i] = y[i] + h * acc;
            }
            f(t + C[s] * h, &stage, &mut k[s]);
        }
        stats.rhs_evals += 6;
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        y_new.copy_from_slice(&stage);
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                acc += E[j] * kj[i];
            }
            err[i] = h * acc;
        }
        let e = error_norm(&err, &y, &y_new, opts.rtol, opts.atol);
        if !e.is_finite() {
            if let Some(g) = opts.guard {
                return Err(Error::CharacteristicBlowUp { t, guard: g });
            }
            h *= FAC_MIN;
            stats.rejected += 1;
            last_rejected = true;
            continue;
        }
        if e <= 1.0 {
            t = if last { p.t1 } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            stats.accepted += 1;
            if let Some(g) = opts.guard {
                if y.iter().any(|v| !(v.abs() <= g)) {
                    return Err(Error::CharacteristicBlowUp { t, guard: g });
                }
            }
            let alpha = 0.2 - 0.75 * PI_BETA;
            let mut fac = SAFETY * e.max(1e-10).powf(-alpha) * err_old.powf(PI_BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(opts.h_max);
            err_old = e.max(1e-4);
            last_rejected = false;
        } else {
            let fac = (SAFETY * e.powf(-0.2)).max(FAC_MIN);
            h *= fac;
            stats.rejected += 1;
            last_rejected = true;
        }
    }
    Ok((y, stats))
}
