//! Composition–multiplier closures: `G(z,t) = K_t(z) G(Φ_t(z), 0)`.
//!
//! Coefficient `n` of every closed ODE reads coefficients `≤ n` only, so a run
//! at cap `N` reproduces the first `N + 1` coefficients of any larger run.

pub mod matrix;
pub mod multitype;
pub mod scalar;

pub use matrix::{
    apply_multiplier, binomial_thinning_half, closure_richardson_solve, integrate_matrix_multiplier,
    integrate_matrix_multiplier_adaptive, matrix_closure_solve, production_half_step, purebd_richardson_solve,
    purebd_strang_solve, telegraph_characteristic, JointArray, MatrixMultiplierState,
};
pub use multitype::{
    closure_solve_multi, integrate_closure_multi, integrate_closure_multi_with, multi_composition, MultiClosureState,
};
pub use scalar::{
    bd_extinction_probability, bd_geometric_tail, bd_geometric_tail_log, bd_tail_parameters, closure_rhs,
    closure_solve, closure_solve_with, composition_kernel, composition_kernel_with, integrate_closure,
    integrate_closure_with, ClosureOptions, ClosureState, CompositionKernel, GeometricTail, DEFAULT_BLOWUP_GUARD,
};
