use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sgld_cli::commands;
use sgld_cli::config::ExperimentConfig;
use sgld_cli::CliError;

/// Langevin-type chains over dependent data streams: simulation, stability
/// certificates, and total-variation convergence experiments.
#[derive(Parser)]
#[command(name = "sgld", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured ensemble and write snapshots.csv + summary.json.
    Run(CommonArgs),
    /// Check dissipativity/growth constants; JSON report to stdout.
    Check(CommonArgs),
    /// Build (and optionally verify) the drift certificate.
    Drift(CommonArgs),
    /// Build (and optionally verify) the minorization certificate.
    Minorize(CommonArgs),
    /// Two-start total-variation decay experiment.
    Tv(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Size of the worker pool (default: one per core). Results do not
    /// depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

type CommandFn = fn(&ExperimentConfig, &CommonArgs) -> Result<bool, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, CommandFn) = match &cli.command {
        Command::Run(a) => (a, |c, a| commands::cmd_run(c, &a.out, a.seed)),
        Command::Check(a) => (a, |c, a| commands::cmd_check(c, a.seed)),
        Command::Drift(a) => (a, |c, a| commands::cmd_drift(c, &a.out, a.seed)),
        Command::Minorize(a) => (a, |c, a| commands::cmd_minorize(c, &a.out, a.seed)),
        Command::Tv(a) => (a, |c, a| commands::cmd_tv(c, &a.out, a.seed)),
    };

    match execute(args, run) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("sgld: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &CommonArgs, run: CommandFn) -> Result<bool, CliError> {
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("--config {}: {e}", args.config.display())))?;
    let config = ExperimentConfig::from_json(&text)?;
    std::fs::create_dir_all(&args.out)?;
    run(&config, args)
}
