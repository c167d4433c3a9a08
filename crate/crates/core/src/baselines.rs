//! Reference solvers on the truncated generator: dense Padé exponential,
//! uniformization, direct RK45 with an absorbing cap, and dense stationary
//! elimination.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::generators::SparseOperator;
use crate::integrators::{rk45_solve_with, OdeProblem, Rk45Options, StepStats};
use crate::linalg::LuFactor;

/// Scaling threshold for the degree-13 Padé approximant (Higham 2005).
pub const PADE13_THETA: f64 = 5.371920351148152;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Keeps each uniformization chunk's `e^{−ατ}` far from underflow.
const UNIFORMIZATION_CHUNK: f64 = 100.0;

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(t·L)` by degree-13 Padé with scaling and squaring.
pub fn dense_expm(l: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let n = l.nrows();
    if l.ncols() != n {
        return Err(Error::ShapeMismatch(format!("expm of a {}x{} matrix", n, l.ncols())));
    }
    if !t.is_finite() || l.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dense_expm input"));
    }
    let mut a = l * t;
    let norm = one_norm(&a);
    let s = if norm > PADE13_THETA { (norm / PADE13_THETA).log2().ceil() as i32 } else { 0 };
    if s > 0 {
        a *= 0.5f64.powi(s);
    }
    let b = &PADE13;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u_poly = &a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_poly;
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = LuFactor::new(&q)?.solve_matrix(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dense_expm result"));
    }
    Ok(r)
}

/// `exp(t·L) p0` through the dense exponential.
pub fn dense_expm_action(op: &SparseOperator, p0: &[f64], t: f64) -> Result<Vec<f64>> {
    check_len(op, p0)?;
    let e = dense_expm(&op.to_dense(), t)?;
    Ok((e * nalgebra::DVector::from_column_slice(p0)).as_slice().to_vec())
}

/// `Σ_k e^{−αt}(αt)^k/k! R^k p0`, `R = I + L/α`, `α = max|L_ii|`.
///
/// Long horizons are split into chunks with `ατ ≤ 100`; each chunk stops once the
/// running Poisson mass is within `tol / chunks` of one.
pub fn uniformization_solve(op: &SparseOperator, p0: &[f64], t: f64, tol: f64) -> Result<Vec<f64>> {
    check_len(op, p0)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", "must be finite and nonnegative"));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let alpha = op.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if alpha == 0.0 || t == 0.0 {
        return Ok(p0.to_vec());
    }
    let chunks = (alpha * t / UNIFORMIZATION_CHUNK).ceil().max(1.0) as usize;
    let tau = t / chunks as f64;
    let lam = alpha * tau;
    let chunk_tol = tol / chunks as f64;
    let max_terms = (lam + 20.0 * lam.sqrt() + 100.0) as usize;
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut term = vec![0.0; n];
    let mut lv = vec![0.0; n];
    for _ in 0..chunks {
        let mut w = (-lam).exp();
        let mut cum = w;
        term.copy_from_slice(&p);
        let mut acc: Vec<f64> = p.iter().map(|v| w * v).collect();
        let mut k = 0usize;
        while 1.0 - cum > chunk_tol && k < max_terms {
            k += 1;
            op.matvec(&term, &mut lv);
            for (x, l) in term.iter_mut().zip(&lv) {
                *x += l / alpha;
            }
            w *= lam / k as f64;
            cum += w;
            for (a, x) in acc.iter_mut().zip(&term) {
                *a += w * x;
            }
        }
        p = acc;
    }
    Ok(p)
}

/// RK45 on `ṗ = L p` with the absorbing cap of the truncated operator.
pub fn truncated_direct_solve(op: &SparseOperator, p0: &[f64], t: f64, rtol: f64) -> Result<(Vec<f64>, StepStats)> {
    check_len(op, p0)?;
    let problem = OdeProblem::new(|_, y: &[f64], dy: &mut [f64]| op.matvec(y, dy), p0.to_vec(), 0.0, t);
    rk45_solve_with(&problem, &Rk45Options { rtol, atol: rtol * 1e-3, ..Default::default() })
}

/// Solves `L p = 0`, `Σ p = 1` with the last balance row replaced by ones.
pub fn dense_stationary(op: &SparseOperator) -> Result<Vec<f64>> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty generator".into()));
    }
    let mut m = op.to_dense();
    m.row_mut(n - 1).fill(1.0);
    let lu = LuFactor::new(&m)?;
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    lu.solve_in_place(&mut rhs);
    let s: f64 = rhs.iter().sum();
    rhs.iter_mut().for_each(|v| *v /= s);
    Ok(rhs)
}

fn check_len(op: &SparseOperator, p0: &[f64]) -> Result<()> {
    if op.dim() != p0.len() {
        return Err(Error::ShapeMismatch(format!("operator dim {} vs state length {}", op.dim(), p0.len())));
    }
    Ok(())
}
