use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::config::{ExperimentConfig, Reference};
use crate::metric::error_metric;
use crate::record::{PointRecord, ResultRecord};
use crate::solvers::{solve, SolverOutput};
use crate::Result;

/// Below clock resolution a run is reported at this floor so timings stay positive.
pub const CLOCK_FLOOR_SECONDS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides the config's repetition count.
    pub repetitions: Option<usize>,
    /// Worker threads for untimed sweeps; timed sweeps always run serially.
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { repetitions: None, threads: 1 }
    }
}

/// Runs every solver at every sweep value. Solver failures become tagged
/// points; only an invalid config aborts the run.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ResultRecord> {
    config.validate()?;
    let mut config = config.clone();
    if let Some(r) = opts.repetitions {
        config.repetitions = r.max(1);
    }
    let values = &config.sweep.values;
    let threads = if config.timing { 1 } else { opts.threads.clamp(1, values.len()) };
    let mut slots: Vec<Vec<PointRecord>> = vec![Vec::new(); values.len()];
    if threads == 1 {
        for (slot, &v) in slots.iter_mut().zip(values) {
            *slot = evaluate(&config, v);
        }
    } else {
        let next = AtomicUsize::new(0);
        let done = Mutex::new(&mut slots);
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&v) = values.get(i) else { break };
                    let recs = evaluate(&config, v);
                    done.lock().expect("no worker panics while holding the lock")[i] = recs;
                });
            }
        });
    }
    let points = slots.into_iter().flatten().collect();
    Ok(ResultRecord::new(config, points))
}

/// Runs the experiment and writes the result under `out_dir`.
pub fn run_to_dir(config: &ExperimentConfig, opts: &RunOptions, out_dir: &Path) -> Result<(ResultRecord, PathBuf)> {
    let record = run_experiment(config, opts)?;
    let path = out_dir.join(config.output_file_name());
    record.write_atomic(&path)?;
    Ok((record, path))
}

fn failed(value: f64, solver: &str, failure: String) -> PointRecord {
    PointRecord {
        axis_value: value,
        solver: solver.to_string(),
        seconds: None,
        error: None,
        steps: None,
        iterations: None,
        failure: Some(failure),
    }
}

fn evaluate(config: &ExperimentConfig, value: f64) -> Vec<PointRecord> {
    let point = match config.point(value) {
        Ok(p) => p,
        Err(e) => return config.solvers.iter().map(|s| failed(value, s.label(), format!("model: {e}"))).collect(),
    };
    let reference = match &config.reference {
        Reference::Keyword(_) => None,
        Reference::Solver(spec) => Some(solve(&point, spec).map(|o| o.window).map_err(|e| e.to_string())),
    };
    let mut out = Vec::with_capacity(config.solvers.len());
    for spec in &config.solvers {
        let label = spec.label();
        // Warm-up run; its output is the one scored.
        let first = match solve(&point, spec) {
            Ok(o) => o,
            Err(e) => {
                out.push(failed(value, label, format!("solver: {e}")));
                continue;
            }
        };
        let error = match &reference {
            None => error_metric(&first.window, &first.window),
            Some(Ok(r)) => error_metric(&first.window, r),
            Some(Err(e)) => {
                out.push(failed(value, label, format!("reference: {e}")));
                continue;
            }
        };
        let error = match error {
            Ok(e) => e,
            Err(e) => {
                out.push(failed(value, label, format!("metric: {e}")));
                continue;
            }
        };
        let seconds = if config.timing {
            match best_of(config.repetitions, || solve(&point, spec)) {
                Ok(s) => Some(s),
                Err(e) => {
                    out.push(failed(value, label, format!("solver: {e}")));
                    continue;
                }
            }
        } else {
            None
        };
        let SolverOutput { steps, iterations, .. } = first;
        out.push(PointRecord {
            axis_value: value,
            solver: label.to_string(),
            seconds,
            error: Some(error),
            steps,
            iterations,
            failure: None,
        });
    }
    out
}

/// Shortest wall clock over `reps` runs.
pub fn best_of<T, E>(reps: usize, mut f: impl FnMut() -> std::result::Result<T, E>) -> std::result::Result<f64, E> {
    let mut best = f64::INFINITY;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        std::hint::black_box(f()?);
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best.max(CLOCK_FLOOR_SECONDS))
}
