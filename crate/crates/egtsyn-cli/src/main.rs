//! `egtsyn`: command-line front end for the synergy-classification toolkit.
//!
//! One subcommand per pipeline stage: `featurize`, `split`, `train`,
//! `evaluate`, `ablate`, `predict`, `gradcheck`. Every run resolves its
//! flags (explicit flags win over `--config` entries, which win over the
//! built-in defaults), emits a reproducibility manifest before any other
//! side effect, and draws all randomness from the single `--seed`.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error,
//! 3 training diverged (non-finite loss).

mod commands;
mod config;
mod manifest;

use clap::{Parser, Subcommand};
use config::ConfigMap;
use egtsyn::pipeline::PipelineError;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

/// Errors carried out of a subcommand, tagged with how to exit.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters: exit 2.
    Usage(String),
    /// Training produced a non-finite loss: exit 3.
    Diverged(String),
    /// Everything else (I/O, data, model, metrics): exit 1.
    Runtime(anyhow::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Diverged(msg) => f.write_str(msg),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> CliError {
        match e {
            PipelineError::Parameter { .. } => CliError::Usage(e.to_string()),
            PipelineError::NonFiniteLoss { .. } => CliError::Diverged(e.to_string()),
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> CliError {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Runtime(e.into())
    }
}

impl From<egtsyn::model::ModelError> for CliError {
    fn from(e: egtsyn::model::ModelError) -> CliError {
        CliError::Runtime(e.into())
    }
}

impl From<egtsyn::model::CheckpointError> for CliError {
    fn from(e: egtsyn::model::CheckpointError) -> CliError {
        CliError::Runtime(e.into())
    }
}

impl From<egtsyn::molgraph::GraphError> for CliError {
    fn from(e: egtsyn::molgraph::GraphError) -> CliError {
        CliError::Runtime(e.into())
    }
}

impl From<egtsyn::smiles::SmilesError> for CliError {
    fn from(e: egtsyn::smiles::SmilesError) -> CliError {
        CliError::Runtime(e.into())
    }
}

#[derive(Parser)]
#[command(
    name = "egtsyn",
    version,
    about = "Drug-pair synergy classification: featurization, training, evaluation"
)]
struct Cli {
    /// Flat key=value file supplying flag defaults; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a drug table and write one graph dump per drug.
    Featurize(commands::featurize::Args),
    /// Build a cross-validation plan and write it as text.
    Split(commands::split::Args),
    /// Train one variant on one fold and write checkpoint + history.
    Train(commands::train::Args),
    /// Score a checkpoint on a fold's test records.
    Evaluate(commands::evaluate::Args),
    /// Train and evaluate all four variants on identical folds.
    Ablate(commands::ablate::Args),
    /// Predict synergy for one drug pair on one cell line.
    Predict(commands::predict::Args),
    /// Verify analytic gradients against finite differences.
    Gradcheck(commands::gradcheck::Args),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = ConfigMap::load(cli.config.as_deref())?;
    let result = match cli.command {
        Command::Featurize(args) => commands::featurize::run(args, &mut cfg),
        Command::Split(args) => commands::split::run(args, &mut cfg),
        Command::Train(args) => commands::train::run(args, &mut cfg),
        Command::Evaluate(args) => commands::evaluate::run(args, &mut cfg),
        Command::Ablate(args) => commands::ablate::run(args, &mut cfg),
        Command::Predict(args) => commands::predict::run(args, &mut cfg),
        Command::Gradcheck(args) => commands::gradcheck::run(args, &mut cfg),
    };
    cfg.warn_unused();
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Diverged(_) => ExitCode::from(3),
                CliError::Runtime(_) => ExitCode::from(1),
            }
        }
    }
}
