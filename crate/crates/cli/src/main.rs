mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Context, Report};
use config::ConfigError;

#[derive(Debug, Parser)]
#[command(
    name = "driftcrb",
    version,
    about = "Cramér-Rao bounds for polynomial signals under sensor drift"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact and closed-form bounds for a sensor network (JSON).
    Crb(CommonArgs),
    /// Sample size needed for a given approximation accuracy over a (rho, gamma) grid (CSV).
    MreMap(CommonArgs),
    /// Average bound versus Monte-Carlo variance for random networks (CSV).
    Multisensor(CommonArgs),
    /// Modified bound versus quasi-ML variance across quantizer resolutions (CSV).
    Quantized(CommonArgs),
    /// Monte-Carlo variance of the ML estimator (JSON).
    Montecarlo(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the config's `output` key, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config's `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Treat approximation-validity warnings as failures.
    #[arg(long)]
    strict: bool,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_STRICT: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    match err.downcast_ref::<driftcrb::Error>() {
        Some(driftcrb::Error::Domain { .. }) => EXIT_CONFIG,
        Some(_) => EXIT_NUMERIC,
        None => EXIT_FAILURE,
    }
}

fn run(cli: Cli) -> anyhow::Result<Report> {
    let (args, command): (CommonArgs, fn(&Context) -> anyhow::Result<Report>) = match cli.command {
        Command::Crb(a) => (a, commands::crb),
        Command::MreMap(a) => (a, commands::mre_map),
        Command::Multisensor(a) => (a, commands::multisensor),
        Command::Quantized(a) => (a, commands::quantized),
        Command::Montecarlo(a) => (a, commands::montecarlo),
    };
    let loaded = config::load(&args.config)?;
    let out = args.out.clone().or_else(|| loaded.config.output.clone());
    let seed = args.seed.or(loaded.config.seed).unwrap_or(0);
    let report = command(&Context { loaded, seed })?;
    output::write(&report.bytes, out.as_deref())?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    if args.strict && !report.warnings.is_empty() {
        anyhow::bail!(StrictFailure(report.warnings.len()));
    }
    Ok(report)
}

#[derive(Debug)]
struct StrictFailure(usize);

impl std::fmt::Display for StrictFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} approximation warning(s) with --strict", self.0)
    }
}

impl std::error::Error for StrictFailure {}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<StrictFailure>().is_some() {
                ExitCode::from(EXIT_STRICT)
            } else {
                ExitCode::from(exit_code(&err))
            }
        }
    }
}
