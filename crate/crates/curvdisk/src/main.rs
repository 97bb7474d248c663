use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use curvdisk::commands::{self, Command};
use curvdisk::{RunConfig, RunError, Status};
use curvdisk_core::solver::Side;

#[derive(Parser)]
#[command(name = "curvdisk", version, about = "Conformal metrics on the disk with prescribed Gaussian and geodesic curvature")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 or omitted uses all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for random test fields (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Minimize jointly over the field and the mass parameter.
    Solve,
    /// Solve one of the two limiting problems.
    SolveLimit {
        #[arg(long, value_enum)]
        side: SideArg,
    },
    /// Run the inequality harness and write deficit tables.
    CheckInequalities,
    /// Reproduce the closed-form limiting solutions.
    Verify,
    /// Mesh refinement study.
    Refine,
    /// Perturbation sweep around nonnegative base curvatures.
    Perturb,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    #[value(name = "0")]
    Zero,
    #[value(name = "2pi")]
    TwoPi,
}

fn run(cli: Cli) -> Result<String, RunError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()
        .map_err(|e| RunError::failure(format!("invalid config: {e:#}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build_global()
        .map_err(|e| RunError::failure(e.to_string()))?;
    let command = match cli.command {
        Cmd::Solve => Command::Solve,
        Cmd::SolveLimit { side: SideArg::Zero } => Command::SolveLimit(Side::Zero),
        Cmd::SolveLimit { side: SideArg::TwoPi } => Command::SolveLimit(Side::TwoPi),
        Cmd::CheckInequalities => Command::CheckInequalities,
        Cmd::Verify => Command::Verify,
        Cmd::Refine => Command::Refine,
        Cmd::Perturb => Command::Perturb,
    };
    let out = cli.out.unwrap_or_else(|| cfg.output_dir.clone());
    commands::run(command, &cfg, &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            // clap's own usage errors would exit with 2, which means endpoint
            // collapse here
            let _ = e.print();
            return ExitCode::from(Status::Failure.code());
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status.code())
        }
    }
}
