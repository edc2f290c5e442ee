use std::path::Path;

use clap::Args;

use cb_core::predict::{PredictMode, PredictiveDistribution};
use cb_core::simgen::{discrete_kl, holdout_log_likelihood, tie_adjusted_accuracy};

use crate::io::{read_labels_csv, read_predictions, MetricsFile, TruthFile};
use crate::CliError;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predictions CSV from `predict`.
    #[arg(long)]
    pub predictions: String,
    /// True labels CSV.
    #[arg(long)]
    pub y: String,
    /// Optional simulation truth for the KL-to-truth metric.
    #[arg(long)]
    pub truth: Option<String>,
    /// Output metrics JSON.
    #[arg(long)]
    pub out: String,
}

pub fn run(args: &EvaluateArgs) -> Result<(), CliError> {
    let table = read_predictions(&args.predictions)?;
    let y = read_labels_csv(&args.y)?;
    if table.probs.nrows() != y.len() {
        return Err(CliError::Data(format!(
            "{} prediction rows vs {} labels",
            table.probs.nrows(),
            y.len()
        )));
    }
    let pred = PredictiveDistribution::from_probs(table.probs.clone(), PredictMode::PlugInMean)?;
    let ll = holdout_log_likelihood(&pred, &y)?;
    let accuracy = tie_adjusted_accuracy(&pred, &y)?;
    if let Some((w_cbm, w_cbc)) = table.weights {
        println!("predictions carry model weights cbm {w_cbm:.6} / cbc {w_cbc:.6}");
    }

    let mean_kl_to_truth = match &args.truth {
        Some(path) => {
            let truth = TruthFile::load(path)?;
            let probs_true = truth.probs_matrix()?;
            if probs_true.nrows() != table.probs.nrows() {
                return Err(CliError::Data(format!(
                    "truth has {} rows, predictions have {}",
                    probs_true.nrows(),
                    table.probs.nrows()
                )));
            }
            if probs_true.ncols() != table.probs.ncols() {
                return Err(CliError::Data(format!(
                    "truth has {} categories, predictions have {}",
                    probs_true.ncols(),
                    table.probs.ncols()
                )));
            }
            let n = probs_true.nrows();
            let total: f64 = (0..n)
                .map(|i| discrete_kl(probs_true.row(i), table.probs.row(i)))
                .sum();
            Some(total / n as f64)
        }
        None => None,
    };

    let metrics = MetricsFile {
        version: 1,
        n_test: y.len(),
        mean_holdout_log_likelihood: ll,
        tie_adjusted_accuracy: accuracy,
        mean_kl_to_truth,
    };
    metrics.save(Path::new(&args.out))?;
    println!("mean holdout log likelihood {ll:.6}");
    println!("tie-adjusted accuracy {accuracy:.6}");
    if let Some(kl) = mean_kl_to_truth {
        println!("mean KL to truth {kl:.6}");
    }
    println!("metrics -> {}", args.out);
    Ok(())
}
