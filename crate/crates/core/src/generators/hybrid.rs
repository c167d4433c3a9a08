use super::{truncate_generator, LinearRateGenerator, SparseOperator};
use crate::error::{Error, Result};
use crate::series::strides;

/// Linear-rate part per species plus a sparse remainder on the joint box `{0..N}^K`.
///
/// Joint states are flattened row-major with the last species fastest.
#[derive(Debug, Clone)]
pub struct HybridModel {
    affine: Vec<LinearRateGenerator>,
    remainder: SparseOperator,
    cap: usize,
}

impl HybridModel {
    pub fn new(affine: Vec<LinearRateGenerator>, remainder: SparseOperator, cap: usize) -> Result<Self> {
        if affine.is_empty() {
            return Err(Error::InvalidArgument("hybrid model needs at least one species".into()));
        }
        let dim = (cap + 1).pow(affine.len() as u32);
        if remainder.dim() != dim {
            return Err(Error::ShapeMismatch(format!(
                "remainder dimension {} does not match box dimension {dim}",
                remainder.dim()
            )));
        }
        Ok(Self { affine, remainder, cap })
    }

    pub fn affine(&self) -> &[LinearRateGenerator] {
        &self.affine
    }

    pub fn remainder(&self) -> &SparseOperator {
        &self.remainder
    }

    pub fn species(&self) -> usize {
        self.affine.len()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn joint_dim(&self) -> usize {
        (self.cap + 1).pow(self.affine.len() as u32)
    }

    /// Truncated affine part as a Kronecker sum on the joint box.
    pub fn affine_operator(&self) -> SparseOperator {
        let side = self.cap + 1;
        let k = self.affine.len();
        let st = strides(k, side);
        let dim = self.joint_dim();
        let mut triplets = Vec::new();
        for (axis, gen) in self.affine.iter().enumerate() {
            let op = truncate_generator(gen, self.cap);
            for flat in 0..dim {
                let n_axis = (flat / st[axis]) % side;
                let base = flat - n_axis * st[axis];
                for &(r, c, v) in op.triplets() {
                    if c == n_axis {
                        triplets.push((base + r * st[axis], flat, v));
                    }
                }
            }
        }
        SparseOperator::from_triplets(dim, triplets).expect("Kronecker sum stays in the box")
    }

    /// Full truncated joint generator `𝒜 + ℬ`.
    pub fn full_operator(&self) -> SparseOperator {
        self.affine_operator().without_band().sum(&self.remainder.clone().without_band()).expect("same dimension")
    }
}
