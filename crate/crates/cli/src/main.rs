//! `cb`: categorical regression pipelines over the categorical-from-binary
//! library — simulate, fit, predict, evaluate, featurize, bma-weights.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cb_core::error::CbError;

mod commands;
mod config;
mod io;

/// CLI-level errors, carrying their exit code class.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config files, or specifications (exit 2).
    Config(String),
    /// Unreadable or inconsistent data files (exit 3).
    Data(String),
    /// Numerical breakdown inside inference (exit 4).
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl From<CbError> for CliError {
    fn from(e: CbError) -> Self {
        match e {
            CbError::InvalidSpec(_) => CliError::Config(e.to_string()),
            CbError::NumericalFailure(_) | CbError::InvalidCovariance(_) => {
                CliError::Numerical(e.to_string())
            }
            CbError::InvalidLabel { .. }
            | CbError::ShapeMismatch(_)
            | CbError::InvalidData(_) => CliError::Data(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "cb",
    about = "Bayesian categorical regression via independent-binary variational inference",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a simulated dataset (X.csv, y.csv, truth.json).
    Simulate(commands::simulate::SimulateArgs),
    /// Fit a variational posterior to labeled data.
    Fit(commands::fit::FitArgs),
    /// Predict category probabilities for new covariates.
    Predict(commands::predict::PredictArgs),
    /// Score predictions against held-out labels (and optional truth).
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Turn a timestamped event log into a design matrix.
    Featurize(commands::featurize::FeaturizeArgs),
    /// Compute model-average weights from a fitted posterior.
    BmaWeights(commands::bma::BmaWeightsArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Fit(args) => commands::fit::run(args),
        Command::Predict(args) => commands::predict::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Featurize(args) => commands::featurize::run(args),
        Command::BmaWeights(args) => commands::bma::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
