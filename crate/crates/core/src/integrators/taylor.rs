use crate::error::{Error, Result};
use crate::series::cauchy_product_into;

/// Coefficient-wise `y' = linear·y + bilinear·(y ⋆ y) + source`, with `⋆` the
/// truncated Cauchy product over the state index.
///
/// Binary fission `A(z) = λz² − (λ+μ)z + μ` is `linear = −(λ+μ)`,
/// `bilinear = λ`, `source = μ δ_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorRhs {
    pub linear: f64,
    pub bilinear: f64,
    pub source: Vec<f64>,
}

impl TaylorRhs {
    pub fn binary_fission(lambda: f64, mu: f64, cap: usize) -> Self {
        let mut source = vec![0.0; cap + 1];
        source[0] = mu;
        Self { linear: -(lambda + mu), bilinear: lambda, source }
    }
}

/// `steps` Taylor steps of order `order` over `[0, t]`.
///
/// Normalized coefficients `c_k = y^{(k)}/k!` obey
/// `(k+1) c_{k+1} = linear·c_k + bilinear·Σ_j c_j ⋆ c_{k−j} + source·[k = 0]`.
pub fn taylor_solve(rhs: &TaylorRhs, y0: &[f64], t: f64, steps: usize, order: usize) -> Result<Vec<f64>> {
    let n = y0.len();
    if rhs.source.len() != n {
        return Err(Error::ShapeMismatch(format!("source length {} for state length {n}", rhs.source.len())));
    }
    if steps == 0 || order == 0 {
        return Err(Error::InvalidArgument("taylor_solve needs steps ≥ 1 and order ≥ 1".into()));
    }
    let h = t / steps as f64;
    let mut c: Vec<Vec<f64>> = vec![vec![0.0; n]; order + 1];
    let mut conv = vec![0.0; n];
    let mut acc = vec![0.0; n];
    let mut y = y0.to_vec();
    for _ in 0..steps {
        c[0].copy_from_slice(&y);
        for k in 0..order {
            acc.iter_mut().for_each(|v| *v = 0.0);
            if rhs.bilinear != 0.0 {
                for j in 0..=k {
                    cauchy_product_into(&c[j], &c[k - j], &mut conv);
                    for (a, v) in acc.iter_mut().zip(&conv) {
                        *a += v;
                    }
                }
            }
            let inv = 1.0 / (k + 1) as f64;
            let (lo, hi) = c.split_at_mut(k + 1);
            for i in 0..n {
                let src = if k == 0 { rhs.source[i] } else { 0.0 };
                hi[0][i] = (rhs.linear * lo[k][i] + rhs.bilinear * acc[i] + src) * inv;
            }
        }
        // Horner in h.
        y.copy_from_slice(&c[order]);
        for k in (0..order).rev() {
            for i in 0..n {
                y[i] = y[i] * h + c[k][i];
            }
        }
    }
    Ok(y)
}
