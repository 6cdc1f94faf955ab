//! Command-line front end: simulation campaigns, selection on CSV data, and
//! path export.
//!
//! Every subcommand accepts its options as flags or from the matching table
//! of a TOML file passed with `--config`; flags win over the file, and the
//! file wins over built-in defaults.

mod config;
mod dataset;
mod path;
mod select;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::Error;

pub use config::FileConfig;
pub use dataset::{read_dataset, Dataset, DatasetArgs};
pub use path::{write_path_csv, PathArgs};
pub use select::{SelectArgs, SelectReport};
pub use simulate::SimulateArgs;

/// Environment variable holding the default worker count for `simulate`.
pub const JOBS_ENV: &str = "ETLASSO_JOBS";

#[derive(Debug, Parser)]
#[command(name = "etlasso", version, about = "Tuning-free Lasso selection with permuted pseudo-features")]
pub struct Cli {
    /// TOML file with [simulate], [select] and [path] tables.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo comparison of selection methods on synthetic data.
    Simulate(SimulateArgs),
    /// Feature selection and prediction on a CSV data set.
    Select(SelectArgs),
    /// Export the Lasso path and entry values of a CSV data set.
    Path(PathArgs),
}

/// Failure classes of the command-line tool, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("column '{0}' has zero variance")]
    ZeroVariance(String),

    #[error("numerical error: {0}")]
    Numeric(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Parse { .. } => 3,
            CliError::ZeroVariance(_) | CliError::Numeric(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::InvalidRho(_)
            | Error::InvalidGridSpec(_)
            | Error::InvalidFoldCount { .. } => CliError::Config(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Simulate(args) => simulate::run(args.merged(file.simulate)),
        Command::Select(args) => select::run(args.merged(file.select)),
        Command::Path(args) => path::run(args.merged(file.path)),
    }
}

/// Entry point used by the binary: parses `std::env::args`, runs, and maps
/// failures to exit codes.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Writes `contents` to `path`, or to stdout when `path` is `None` or `-`.
pub(crate) fn emit(path: Option<&PathBuf>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::write(p, contents).map_err(|e| CliError::io(p.display().to_string(), e))
        }
        _ => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
