use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use glperiod::commands::{cmd_solve_periodic, cmd_stability, cmd_sweep, cmd_verify, SweepAxis};
use glperiod::config::RunConfig;
use glperiod::{exit_code, Failure};

#[derive(Parser)]
#[command(name = "glperiod", version, about = "Time-periodic Ginzburg-Landau solutions and their stability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the time-periodic state and write report, snapshots and manifest.
    SolvePeriodic {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a perturbation about the periodic state and fit decay rates.
    Stability {
        #[arg(long)]
        config: PathBuf,
        /// Manifest of a converged `solve-periodic` run; solved inline otherwise.
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the estimate batteries and inequality spot-checks.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independent solves along one parameter axis.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: SweepAxis,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("GLPERIOD_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Failure::Config(format!("GLPERIOD_THREADS must be a positive integer (got {v:?})")))?;
        if n == 0 {
            return Err(Failure::Config("GLPERIOD_THREADS must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    match cli.command {
        Command::SolvePeriodic { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let run = cmd_solve_periodic(&cfg, &out)?;
            eprintln!("manifest: {}", run.manifest.display());
        }
        Command::Stability { config, base, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.join("stability"));
            let run = cmd_stability(&cfg, base.as_deref(), &out)?;
            eprintln!("manifest: {}", run.manifest.display());
        }
        Command::Verify { config, seed, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.join("verify"));
            let run = cmd_verify(&cfg, seed, &out)?;
            eprintln!("manifest: {}", run.manifest.display());
            let failed = run.reports.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(Failure::ChecksFailed {
                    failed,
                    total: run.reports.len(),
                }
                .into());
            }
        }
        Command::Sweep { config, axis, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.join(format!("sweep_{}", axis.name())));
            let run = cmd_sweep(&cfg, axis, &out)?;
            eprintln!("manifest: {}", run.manifest.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
