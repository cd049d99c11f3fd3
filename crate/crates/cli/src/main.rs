mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use rulefx::Error as CoreError;

#[derive(Debug, Parser)]
#[command(name = "rulefx", version, about = "Rule-based FX strategy pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate candle data and print bar and gap statistics.
    Ingest(IngestArgs),
    /// Grid-search every rule, then evolve GA-MR and GA-MSSR weights.
    Optimize(CommonArgs),
    /// Evaluate B&H, S&H, GA-MR and GA-MSSR on the test split.
    Backtest(CommonArgs),
    /// Print persisted comparison tables.
    Report(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated leverage multipliers, e.g. `1,20`.
    #[arg(long, value_delimiter = ',')]
    pub leverage: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub pair: Option<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, required_unless_present = "file")]
    pub config: Option<PathBuf>,
    /// Validate a single CSV instead of the configured pairs.
    #[arg(long, conflicts_with = "config")]
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub pair: Option<String>,
    /// Dump a standard indicator set for the (single) series as CSV.
    #[arg(long)]
    pub indicators: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// 0 ok, 1 usage or config, 2 data, 3 missing artifacts, 4 numeric.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Core(e) => match e {
                CoreError::MissingFile(_)
                | CoreError::Io(_)
                | CoreError::MalformedRow { .. }
                | CoreError::NonMonotonicTimestamp { .. }
                | CoreError::InvariantViolation { .. }
                | CoreError::SeriesTooShort { .. }
                | CoreError::WindowExceedsSeries { .. } => 2,
                CoreError::MissingArtifacts(_) | CoreError::MalformedArtifact { .. } => 3,
                CoreError::NonFinite(_)
                | CoreError::PositionOutOfRange { .. }
                | CoreError::TooFewDays(_)
                | CoreError::ZeroVolatility
                | CoreError::AccountBlown { .. }
                | CoreError::BandOrderViolation { .. } => 4,
                _ => 1,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Ingest(args) => commands::ingest(args),
        Command::Optimize(args) => commands::optimize(args),
        Command::Backtest(args) => commands::backtest(args),
        Command::Report(args) => commands::report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
