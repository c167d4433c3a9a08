//! Two-stage Rosenbrock W-method (the `ode23s` pair): order 2 with an embedded
//! order-3 estimate, stage matrix `W = I − h d J`, `d = 1/(2 + √2)`.

use nalgebra::DMatrix;

use super::{check_tolerances, error_norm, initial_step, Jacobian, OdeProblem, StepStats};
use crate::error::{Error, Result};
use crate::generators::SparseOperator;
use crate::linalg::{BandLu, LuFactor};

const D: f64 = 0.292_893_218_813_452_5; // 1/(2+√2)
const E32: f64 = 7.414_213_562_373_095; // 6+√2
pub const SAFETY: f64 = 0.8;
pub const FAC_MIN: f64 = 0.2;
pub const FAC_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosenbrockOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for RosenbrockOptions {
    fn default() -> Self {
        Self { rtol: 1e-6, atol: 1e-10, h0: None, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

enum StageLu {
    Dense(LuFactor),
    Band(BandLu),
}

impl StageLu {
    fn solve(&self, b: &mut [f64]) {
        match self {
            StageLu::Dense(lu) => lu.solve_in_place(b),
            StageLu::Band(lu) => lu.solve_in_place(b),
        }
    }
}

enum JacValue {
    Dense(DMatrix<f64>),
    Sparse(SparseOperator),
}

fn stage_matrix(j: &JacValue, s: f64) -> Result<StageLu> {
    match j {
        JacValue::Dense(m) => {
            let n = m.nrows();
            let w = DMatrix::identity(n, n) + m * s;
            Ok(StageLu::Dense(LuFactor::new(&w)?))
        }
        JacValue::Sparse(op) => match op.shifted_band(s) {
            Some(band) => Ok(StageLu::Band(band.factor()?)),
            None => {
                let n = op.dim();
                let w = DMatrix::identity(n, n) + op.to_dense() * s;
                Ok(StageLu::Dense(LuFactor::new(&w)?))
            }
        },
    }
}

pub fn rosenbrock_solve(p: &OdeProblem, rtol: f64, atol: f64) -> Result<(Vec<f64>, StepStats)> {
    rosenbrock_solve_with(p, &RosenbrockOptions { rtol, atol, ..Default::default() })
}

pub fn rosenbrock_solve_with(p: &OdeProblem, opts: &RosenbrockOptions) -> Result<(Vec<f64>, StepStats)> {
    check_tolerances(opts.rtol, opts.atol)?;
    let jac =
        p.jacobian.as_ref().ok_or_else(|| Error::InvalidArgument("Rosenbrock needs a Jacobian descriptor".into()))?;
    let n = p.dim();
    let mut stats = StepStats::default();
    let mut y = p.y0.clone();
    let span = p.t1 - p.t0;
    if span == 0.0 || n == 0 {
        return Ok((y, stats));
    }
    if span < 0.0 {
        return Err(Error::InvalidArgument("Rosenbrock integrates forward in time only".into()));
    }
    let f = &p.rhs;
    let constant = match jac {
        Jacobian::Constant(op) => Some(JacValue::Sparse(op.clone())),
        _ => None,
    };
    let (mut f0, mut f1, mut f2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut k1, mut k2, mut k3) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut dfdt = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];

    let mut t = p.t0;
    f(t, &y, &mut f0);
    stats.rhs_evals += 1;
    let mut h = match opts.h0 {
        Some(h) => h,
        None => initial_step(p, &y, &f0, opts.rtol, opts.atol, 2, &mut stats),
    }
    .min(opts.h_max)
    .min(span);
    let mut cached: Option<(f64, StageLu)> = None;

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
        let lu = match &constant {
            Some(j) => {
                if cached.as_ref().map(|c| c.0) != Some(h) {
                    let lu = stage_matrix(j, -h * D).map_err(|e| singular(t, e, stats))?;
                    cached = Some((h, lu));
                }
                &cached.as_ref().expect("just cached").1
            }
            None => {
                let j = match jac {
                    Jacobian::Dense(g) => JacValue::Dense(g(t, &y)),
                    Jacobian::Sparse(g) => JacValue::Sparse(g(t, &y)),
                    Jacobian::Constant(_) => unreachable!("handled above"),
                };
                cached = Some((h, stage_matrix(&j, -h * D).map_err(|e| singular(t, e, stats))?));
                &cached.as_ref().expect("just built").1
            }
        };
        if !p.autonomous {
            let dt = f64::EPSILON.sqrt() * t.abs().max(1.0);
            f(t + dt, &y, &mut tmp);
            stats.rhs_evals += 1;
            for i in 0..n {
                dfdt[i] = (tmp[i] - f0[i]) / dt;
            }
        }
        let hd = h * D;
        for i in 0..n {
            k1[i] = f0[i] + hd * dfdt[i];
        }
        lu.solve(&mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &tmp, &mut f1);
        for i in 0..n {
            k2[i] = f1[i] - k1[i];
        }
        lu.solve(&mut k2);
        for i in 0..n {
            k2[i] += k1[i];
            y_new[i] = y[i] + h * k2[i];
        }
        f(t + h, &y_new, &mut f2);
        for i in 0..n {
            k3[i] = f2[i] - E32 * (k2[i] - f1[i]) - 2.0 * (k1[i] - f0[i]) + hd * dfdt[i];
        }
        lu.solve(&mut k3);
        stats.rhs_evals += 2;
        for i in 0..n {
            err[i] = h / 6.0 * (k1[i] - 2.0 * k2[i] + k3[i]);
        }
        let e = error_norm(&err, &y, &y_new, opts.rtol, opts.atol);
        if e.is_finite() && e <= 1.0 {
            t = if last { p.t1 } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut f0, &mut f2);
            stats.accepted += 1;
            if !last {
                let fac = (SAFETY * e.max(1e-12).powf(-1.0 / 3.0)).clamp(FAC_MIN, FAC_MAX);
                // Keeping h fixed lets a constant Jacobian reuse its factorization.
                if constant.is_none() || !(0.9..=1.2).contains(&fac) {
                    h = (h * fac).min(opts.h_max);
                }
            }
        } else {
            let fac = if e.is_finite() { (SAFETY * e.powf(-1.0 / 3.0)).clamp(FAC_MIN, 0.9) } else { FAC_MIN };
            h *= fac;
            stats.rejected += 1;
        }
    }
    Ok((y, stats))
}

fn singular(t: f64, e: Error, stats: StepStats) -> Error {
    Error::IntegrationFailure { t, reason: format!("singular stage matrix: {e}"), stats }
}
