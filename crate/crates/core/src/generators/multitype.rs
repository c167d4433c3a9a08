use super::SparseOperator;
use crate::error::{Error, Result};
use crate::series::{strides, unflatten};

/// One rate-table entry: change `r` (a multi-index) at rate `rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTypeTerm {
    pub r: Vec<i64>,
    pub rate: f64,
}

/// `L_{n+r,n} = Σ_i α^{(i)}_r n_i + β_r` on `K` types.
///
/// Type-`i` entries need `r + e_i ≥ 0` componentwise; immigration needs `r ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTypeGenerator {
    species: usize,
    per_type: Vec<Vec<MultiTypeTerm>>,
    immigration: Vec<MultiTypeTerm>,
}

impl MultiTypeGenerator {
    pub fn new(per_type: Vec<Vec<MultiTypeTerm>>, immigration: Vec<MultiTypeTerm>) -> Result<Self> {
        let k = per_type.len();
        if k == 0 {
            return Err(Error::InvalidArgument("multi-type generator needs at least one type".into()));
        }
        for (i, terms) in per_type.iter().enumerate() {
            for t in terms {
                check_len(&t.r, k)?;
                if t.r.iter().enumerate().any(|(j, &rj)| rj + i64::from(i == j) < 0) {
                    return Err(Error::param("r", format!("type {i} change {:?} removes a non-ancestor", t.r)));
                }
                if !t.rate.is_finite() {
                    return Err(Error::NonFinite("multi-type rate"));
                }
            }
        }
        for t in &immigration {
            check_len(&t.r, k)?;
            if t.r.iter().any(|&rj| rj < 0) {
                return Err(Error::param("r", "immigration changes must be nonnegative"));
            }
        }
        Ok(Self { species: k, per_type, immigration })
    }

    /// Markov generator from off-diagonal tables; the `r = 0` diagonal entries
    /// are derived so that columns sum to zero.
    pub fn markov(per_type: Vec<Vec<MultiTypeTerm>>, immigration: Vec<MultiTypeTerm>) -> Result<Self> {
        let k = per_type.len();
        let zero = vec![0i64; k];
        let mut per_type = per_type;
        for terms in &mut per_type {
            let total: f64 = terms.iter().map(|t| t.rate).sum();
            if terms.iter().any(|t| t.r == zero || t.rate < 0.0) {
                return Err(Error::param("rate", "Markov tables take positive off-diagonal rates"));
            }
            terms.push(MultiTypeTerm { r: zero.clone(), rate: -total });
        }
        let mut immigration = immigration;
        let total: f64 = immigration.iter().map(|t| t.rate).sum();
        if total != 0.0 {
            immigration.push(MultiTypeTerm { r: zero, rate: -total });
        }
        Self::new(per_type, immigration)
    }

    /// Per type `i`: birth `lambda`, death `mu`, and `X_i → X_i + X_{(i+1) mod K}` at `alpha`.
    pub fn cyclic_cross_production(species: usize, lambda: f64, mu: f64, alpha: f64) -> Result<Self> {
        let per_type = (0..species)
            .map(|i| {
                let mut birth = vec![0; species];
                birth[i] = 1;
                let mut death = vec![0; species];
                death[i] = -1;
                let mut cross = vec![0; species];
                cross[(i + 1) % species] += 1;
                vec![
                    MultiTypeTerm { r: birth, rate: lambda },
                    MultiTypeTerm { r: death, rate: mu },
                    MultiTypeTerm { r: cross, rate: alpha },
                ]
            })
            .collect();
        Self::markov(per_type, Vec::new())
    }

    pub fn species(&self) -> usize {
        self.species
    }

    pub fn per_type(&self) -> &[Vec<MultiTypeTerm>] {
        &self.per_type
    }

    pub fn immigration(&self) -> &[MultiTypeTerm] {
        &self.immigration
    }

    /// Joint operator on `{0..N}^K` with out-of-box transitions dropped.
    pub fn truncate(&self, cap: usize) -> SparseOperator {
        let k = self.species;
        let side = cap + 1;
        let st = strides(k, side);
        let dim = side.pow(k as u32);
        let mut idx = vec![0usize; k];
        let mut triplets = Vec::new();
        for flat in 0..dim {
            unflatten(flat, side, &mut idx);
            let mut push = |r: &[i64], v: f64| {
                if v == 0.0 {
                    return;
                }
                let mut target = 0usize;
                for d in 0..k {
                    let t = idx[d] as i64 + r[d];
                    if t < 0 || t > cap as i64 {
                        return;
                    }
                    target += t as usize * st[d];
                }
                triplets.push((target, flat, v));
            };
            for (i, terms) in self.per_type.iter().enumerate() {
                for t in terms {
                    push(&t.r, t.rate * idx[i] as f64);
                }
            }
            for t in &self.immigration {
                push(&t.r, t.rate);
            }
        }
        SparseOperator::from_triplets(dim, triplets).expect("targets inside the box")
    }
}

fn check_len(r: &[i64], k: usize) -> Result<()> {
    if r.len() != k {
        return Err(Error::ShapeMismatch(format!("change vector of length {} for {k} types", r.len())));
    }
    Ok(())
}
