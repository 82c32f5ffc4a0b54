//! Command-line driver for the market-making pipeline.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hawkes_mm::Error;

use config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "hawkes-mm", version, about = "Market making with Hawkes order flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Approximate a kernel by exponential sums and report the errors.
    KernelApprox,
    /// Solve the HJB equation on the grid and export values and feedback.
    Solve,
    /// Run closed-loop episodes of one control against the market.
    Simulate,
    /// Compare strategies built on different market beliefs.
    Compare,
    /// Branching estimates for long-memory kernels of growing size.
    Branching,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Json(_) | Error::Domain(_) | Error::Precondition(_) => 2,
        Error::Io(_) => 3,
        Error::Numerical(_) | Error::Instability(_) | Error::Explosion { .. } | Error::Supercritical { .. } => 4,
    }
}

fn run(cli: &Cli) -> hawkes_mm::Result<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    cfg.apply_seed(seed);
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    let out = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    cfg.output_dir = Some(out.clone());
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {k} threads: {e}")))?;
    }
    std::fs::create_dir_all(&out)?;
    match cli.command {
        Command::KernelApprox => commands::kernel_approx(&cfg, &out),
        Command::Solve => commands::solve(&cfg, &out),
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Compare => commands::compare(&cfg, &out),
        Command::Branching => commands::branching(&cfg, &out),
    }?;
    commands::write_resolved(&cfg, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
