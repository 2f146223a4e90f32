use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use corner_flow::scenario::{Mode, Scenario};

mod modes;
mod report;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in {path}: {msg}")]
    Config { path: String, msg: String },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] corner_flow::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use corner_flow::Error as E;
        match self {
            CliError::Config { .. } | CliError::Core(E::InvalidInput(_)) => 2,
            CliError::Core(E::NoConvergence { .. } | E::NonConvergence { .. }) => 3,
            CliError::Core(E::CflViolation { .. } | E::InstabilityDetected { .. }) => 4,
            CliError::Core(E::VacuumReached { .. }) => 5,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "corner-flow", version, about = "Potential flow in a perturbed corner: checks, solves and studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file.
    Run(RunArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// TOML scenario file.
    pub config: PathBuf,
    /// Overrides `mode` from the file.
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Comma-separated weights, overriding `grid.eta`.
    #[arg(long, value_delimiter = ',')]
    pub eta: Option<Vec<f64>>,
    /// Grid halvings; in convergence-study mode the number of refinements (default 2).
    #[arg(long)]
    pub refine: Option<u32>,
    /// Seed for randomized point sampling in check-identities mode.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn load(args: &RunArgs) -> Result<(Scenario, String), CliError> {
    let path = args.config.display().to_string();
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config { path: path.clone(), msg: e.to_string() })?;
    let mut sc: Scenario =
        toml::from_str(&text).map_err(|e| CliError::Config { path: path.clone(), msg: e.to_string() })?;
    if let Some(m) = args.mode {
        sc.mode = m;
    }
    if let Some(eta) = &args.eta {
        sc.grid.eta = eta.clone();
    }
    sc.validate().map_err(|e| match e {
        corner_flow::Error::InvalidInput(msg) => CliError::Config { path, msg },
        other => CliError::Core(other),
    })?;
    Ok((sc, report::sha256_hex(text.as_bytes())))
}

fn run(args: &RunArgs) -> Result<(), CliError> {
    let (sc, hash) = load(args)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Io { path: args.out.display().to_string(), source: e })?;
    let out = report::Out { dir: args.out.clone(), config_hash: hash };
    match sc.mode {
        Mode::CheckIdentities => modes::check_identities(&sc, args, &out),
        Mode::Linear => modes::linear(&sc, args, &out),
        Mode::Nonlinear => modes::nonlinear(&sc, args, &out),
        Mode::ConvergenceStudy => modes::convergence_study(&sc, args, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
