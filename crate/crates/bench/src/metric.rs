use crate::{BenchError, Result};

/// `Σ |a_i − b_i|` on raw coefficients; neither side is renormalized.
pub fn error_metric(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(BenchError::Config(format!("window shapes differ: {} vs {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}
