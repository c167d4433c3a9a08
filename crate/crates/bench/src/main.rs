use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use linrate::generators::{model_zoo, ZOO_NAMES};
use linrate_bench::runner::run_to_dir;
use linrate_bench::selftest::selftest;
use linrate_bench::{recommend, Descriptor, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "linrate-bench", version, about = "Run linrate experiments and method selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for result files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Timed repetitions per point, overriding the config.
    #[arg(long, global = true)]
    reps: Option<usize>,

    /// Worker threads; used only when the config disables timing.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write `fig_data_<name>.json`.
    Run { config: PathBuf },
    /// Pick a method for a generator descriptor.
    Recommend { descriptor: PathBuf },
    /// List zoo models and their kinds.
    ListModels,
    /// Quick end-to-end checks.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: &Cli) -> linrate_bench::Result<ExitCode> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(config)?;
            if cfg.timing && cli.threads > 1 && !cli.quiet {
                eprintln!("note: timed runs are serialized; --threads ignored");
            }
            let opts = RunOptions { repetitions: cli.reps, threads: cli.threads };
            let (record, path) = run_to_dir(&cfg, &opts, &cli.out)?;
            if !cli.quiet {
                println!("{:>12}  {:<24} {:>12} {:>12}  note", cfg.sweep_axis_name(), "solver", "seconds", "l1 error");
                for p in &record.points {
                    let secs = p.seconds.map_or("-".to_string(), |s| format!("{s:.3e}"));
                    let err = p.error.map_or("-".to_string(), |e| format!("{e:.3e}"));
                    println!(
                        "{:>12}  {:<24} {secs:>12} {err:>12}  {}",
                        p.axis_value,
                        p.solver,
                        p.failure.as_deref().unwrap_or("")
                    );
                }
                println!("wrote {}", path.display());
            }
            let failures = record.points.iter().filter(|p| p.failure.is_some()).count();
            Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Recommend { descriptor } => {
            let text = std::fs::read_to_string(descriptor)
                .map_err(|source| linrate_bench::BenchError::Io { path: descriptor.display().to_string(), source })?;
            let r = recommend(&Descriptor::from_json(&text)?);
            println!("{}: {}", r.method.name(), r.rationale);
            Ok(ExitCode::SUCCESS)
        }
        Command::ListModels => {
            for name in ZOO_NAMES {
                let kind = model_zoo(name, &Default::default())?.kind();
                println!("{name:<16} {kind}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            let checks = selftest();
            for c in &checks {
                if !cli.quiet || !c.passed {
                    println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                }
            }
            Ok(if checks.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
