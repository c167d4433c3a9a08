//! Finite-window-exact solvers for countable linear ODE hierarchies whose
//! generators are affine in the source index.
//!
//! Coefficients `0..=N` of the generating function are computed from a closed,
//! lower-triangular ODE on the characteristic flow and its multiplier, so no
//! boundary condition at `N + 1` is ever imposed. Non-affine remainders are
//! handled by splitting or perturbation; classical truncation baselines live in
//! [`baselines`].

pub mod baselines;
pub mod closure;
pub mod error;
pub mod generators;
pub mod integrators;
pub mod linalg;
pub mod perturbation;
pub mod series;
pub mod splitting;
pub mod stationary;

pub use error::{Error, Result};
pub use generators::{
    model_zoo, HybridModel, LinearRateGenerator, MatrixTelegraphModel, Model, MultiTypeGenerator, SparseOperator,
};
pub use series::{SeriesWindow, TensorWindow};
