//! Config-driven experiment runner for the `linrate` solvers.
//!
//! A run takes an [`ExperimentConfig`], evaluates every solver at every sweep
//! point, and scores each output against a reference solve by in-window ℓ¹
//! error. Timings are best-of-R after one untimed warm-up. Results are written
//! atomically as a versioned [`ResultRecord`].

pub mod config;
pub mod metric;
pub mod recommend;
pub mod record;
pub mod runner;
pub mod selftest;
pub mod solvers;

pub use config::{Axis, ExperimentConfig, Mode, ModelSpec, Reference, SolverSpec, Sweep, EXPERIMENT_SCHEMA};
pub use metric::error_metric;
pub use recommend::{recommend, Descriptor, Method, Recommendation, DESCRIPTOR_SCHEMA};
pub use record::{PointRecord, ResultRecord, RESULT_SCHEMA};
pub use runner::{run_experiment, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Solver(#[from] linrate::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
