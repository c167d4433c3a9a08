use super::OdeProblem;
use crate::error::{Error, Result};

pub fn rk4_fixed_solve(p: &OdeProblem, steps: usize) -> Result<Vec<f64>> {
    let mut y = p.y0.clone();
    rk4_fixed_solve_in_place(&p.rhs, &mut y, p.t0, p.t1, steps)?;
    Ok(y)
}

/// Classical RK4 with `steps` equal steps from `t0` to `t1`, overwriting `y`.
pub fn rk4_fixed_solve_in_place(
    f: &dyn Fn(f64, &[f64], &mut [f64]),
    y: &mut [f64],
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<()> {
    if steps == 0 {
        return Err(Error::param("steps", "must be at least 1"));
    }
    let n = y.len();
    let h = (t1 - t0) / steps as f64;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        f(t, y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        f(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
    }
    Ok(())
}
