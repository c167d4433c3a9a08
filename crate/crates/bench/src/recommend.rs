//! Method selection from the structure of a generator, schema `linrate-descriptor/1`.
//!
//! Rules are tried in order and the first match wins:
//!
//! | condition                                         | method                              |
//! |---------------------------------------------------|-------------------------------------|
//! | closed form known                                 | `geometric_tail`                    |
//! | stationary, matrix-valued linear-rate             | `block_thomas`                      |
//! | stationary, linear-rate part plus remainder       | `closure_strang_power_iteration`    |
//! | stationary, otherwise                             | `standard_truncation`               |
//! | no linear-rate part                               | `standard_truncation`               |
//! | remainder, small ε                                | `perturbation`                      |
//! | remainder, `K ≥ 2` or matrix-valued               | `kronecker_strang`                  |
//! | remainder, scalar                                 | `optimized_strang`                  |
//! | matrix-valued                                     | `matrix_closure`                    |
//! | signed coefficients                               | `formal_closure`                    |
//! | `K ≥ 2`                                           | `multi_index_closure`               |
//! | otherwise                                         | `composition_multiplier_closure`    |

use serde::{Deserialize, Serialize};

pub const DESCRIPTOR_SCHEMA: &str = "linrate-descriptor/1";

/// `linear_rate` refers to the affine part when `remainder` is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Descriptor {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub linear_rate: bool,
    #[serde(default = "one")]
    pub species: usize,
    #[serde(default)]
    pub matrix_valued: bool,
    #[serde(default)]
    pub remainder: bool,
    #[serde(default)]
    pub small_eps: bool,
    #[serde(default)]
    pub stationary: bool,
    /// Both the characteristic and the coefficients have stable formulas.
    #[serde(default)]
    pub closed_form: bool,
    #[serde(default)]
    pub signed: bool,
}

fn default_schema() -> String {
    DESCRIPTOR_SCHEMA.to_string()
}

fn one() -> usize {
    1
}

impl Descriptor {
    pub fn linear(species: usize) -> Self {
        Self {
            schema: default_schema(),
            linear_rate: true,
            species,
            matrix_valued: false,
            remainder: false,
            small_eps: false,
            stationary: false,
            closed_form: false,
            signed: false,
        }
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        let d: Self = serde_json::from_str(text)?;
        if d.schema != DESCRIPTOR_SCHEMA {
            return Err(crate::BenchError::Config(format!("unsupported descriptor schema `{}`", d.schema)));
        }
        if d.species == 0 {
            return Err(crate::BenchError::Config("species must be at least 1".into()));
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GeometricTail,
    CompositionMultiplierClosure,
    MultiIndexClosure,
    MatrixClosure,
    FormalClosure,
    KroneckerStrang,
    OptimizedStrang,
    Perturbation,
    BlockThomas,
    ClosureStrangPowerIteration,
    StandardTruncation,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::GeometricTail => "geometric_tail",
            Method::CompositionMultiplierClosure => "composition_multiplier_closure",
            Method::MultiIndexClosure => "multi_index_closure",
            Method::MatrixClosure => "matrix_closure",
            Method::FormalClosure => "formal_closure",
            Method::KroneckerStrang => "kronecker_strang",
            Method::OptimizedStrang => "optimized_strang",
            Method::Perturbation => "perturbation",
            Method::BlockThomas => "block_thomas",
            Method::ClosureStrangPowerIteration => "closure_strang_power_iteration",
            Method::StandardTruncation => "standard_truncation",
        }
    }

    pub fn rationale(self) -> &'static str {
        match self {
            Method::GeometricTail => "evaluate the closed-form tail directly: O(N), no ODE and no truncated generator",
            Method::CompositionMultiplierClosure => {
                "window coefficients are exact at any cap; cost grows like N^2 per step"
            }
            Method::MultiIndexClosure => "joint window is exact per axis and avoids the (N+1)^K dense matrix",
            Method::MatrixClosure => "per-level multiplier blocks scale linearly in the count cap M",
            Method::FormalClosure => "the closure needs only affine rates, not a stochastic generator",
            Method::KroneckerStrang => "affine half factors per species; only the coupling is truncated",
            Method::OptimizedStrang => "exact affine half with a banded stiff remainder; dense wins at small N",
            Method::Perturbation => "expand around the affine propagator; confirm the eps^(Kp+1) slope",
            Method::BlockThomas => "level recurrence solved by block elimination, stable at any cap",
            Method::ClosureStrangPowerIteration => {
                "fixed point of the split step map; Richardson in dt lifts its order"
            }
            Method::StandardTruncation => "no exploitable structure: truncate the state space and exponentiate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub method: Method,
    pub rationale: String,
}

pub fn recommend(d: &Descriptor) -> Recommendation {
    let method = select(d);
    Recommendation { method, rationale: method.rationale().to_string() }
}

fn select(d: &Descriptor) -> Method {
    if d.closed_form {
        return Method::GeometricTail;
    }
    if d.stationary {
        return match (d.linear_rate, d.remainder, d.matrix_valued) {
            (true, false, true) => Method::BlockThomas,
            (true, true, _) => Method::ClosureStrangPowerIteration,
            _ => Method::StandardTruncation,
        };
    }
    if !d.linear_rate {
        return Method::StandardTruncation;
    }
    if d.remainder {
        return if d.small_eps {
            Method::Perturbation
        } else if d.species >= 2 || d.matrix_valued {
            Method::KroneckerStrang
        } else {
            Method::OptimizedStrang
        };
    }
    if d.matrix_valued {
        Method::MatrixClosure
    } else if d.signed {
        Method::FormalClosure
    } else if d.species >= 2 {
        Method::MultiIndexClosure
    } else {
        Method::CompositionMultiplierClosure
    }
}
