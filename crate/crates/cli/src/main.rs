use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use apg_restart::par::Execution;
use apg_restart_cli::{commands, ExperimentConfig, Options};
use clap::{Args, Parser, Subcommand};

/// Exit status for unusable configs or command-line errors.
const EXIT_USAGE: u8 = 2;

type Handler = fn(&ExperimentConfig, &Options) -> Result<i32>;

#[derive(Parser)]
#[command(name = "apgr", version, about = "APG with parameter restart: experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (solver, seed) cell; write trace CSVs and summary.csv.
    Run(CommonArgs),
    /// Run theory-stepsize cells and verify the convergence invariants.
    Check(CommonArgs),
    /// Compare restart schemes: long-format loss gaps and restart counts.
    Compare(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory [default: config `output_dir`, else ./results]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run every solver with this single seed.
    #[arg(long, value_name = "N")]
    seed_override: Option<u64>,
    /// Suppress progress and summary messages.
    #[arg(long)]
    quiet: bool,
    /// Run cells one after another instead of in parallel.
    #[arg(long)]
    sequential: bool,
}

fn prepare(args: &CommonArgs) -> Result<(ExperimentConfig, Options)> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed_override {
        cfg.override_seed(seed);
    }
    let out = match (&args.out, &cfg.output_dir) {
        (Some(out), _) => out.clone(),
        (None, Some(dir)) => args.config.parent().unwrap_or(".".as_ref()).join(dir),
        (None, None) => PathBuf::from("results"),
    };
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let opts = Options {
        out,
        quiet: args.quiet,
        exec,
    };
    Ok((cfg, opts))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, command): (&CommonArgs, Handler) = match &cli.command {
        Command::Run(a) => (a, commands::run),
        Command::Check(a) => (a, commands::check),
        Command::Compare(a) => (a, commands::compare),
    };
    let outcome = prepare(args).and_then(|(cfg, opts)| command(&cfg, &opts));
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
