use std::path::Path;

use clap::Args;

use cb_core::model::{Construction, Dataset};
use cb_core::predict::{
    bma_weights, estimate_log_evidence, posterior_predictive, predict_labels, BmaWeights,
    PosteriorGaussian, PredictMode, PredictTarget,
};

use crate::commands::{build_prior, transform_design};
use crate::config::{ConfigArgs, RunConfig};
use crate::io::{read_labels_csv, read_matrix_csv, write_predictions, PosteriorFile};
use crate::CliError;

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Posterior file from `fit`.
    #[arg(long)]
    pub posterior: String,
    /// Covariates to predict for (raw, pre-transform CSV).
    #[arg(long)]
    pub x: String,
    /// plugin (posterior-mean plug-in) or mc (sampled).
    #[arg(long, default_value = "plugin")]
    pub mode: String,
    /// Output predictions CSV.
    #[arg(long)]
    pub out: String,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Estimate both models' log evidence on the recorded training data and
/// turn them into model weights.
pub fn weights_from_training(
    doc: &PosteriorFile,
    q: &PosteriorGaussian,
    cfg: &RunConfig,
) -> Result<(BmaWeights, f64, f64), CliError> {
    let x_raw = read_matrix_csv(&doc.train_x_path)?;
    let y = read_labels_csv(&doc.train_y_path)?;
    let x = transform_design(x_raw, doc.zscore.as_ref(), doc.intercept)?;
    let data = Dataset::new(x, y, doc.k)?;
    let prior = build_prior(cfg, doc.m)?;
    let log_ev_cbm = estimate_log_evidence(
        q,
        &prior,
        &data,
        doc.link,
        Construction::Cbm,
        cfg.evidence_samples,
        cfg.seed,
    )?;
    let log_ev_cbc = estimate_log_evidence(
        q,
        &prior,
        &data,
        doc.link,
        Construction::Cbc,
        cfg.evidence_samples,
        cfg.seed,
    )?;
    let weights = bma_weights(log_ev_cbm, log_ev_cbc, (cfg.pi_cbm, 1.0 - cfg.pi_cbm))?;
    Ok((weights, log_ev_cbm, log_ev_cbc))
}

pub fn run(args: &PredictArgs) -> Result<(), CliError> {
    let doc = PosteriorFile::load(&args.posterior)?;
    let cfg = args.config.resolve_over(doc.config.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_inner(args, &doc, cfg))
}

fn run_inner(args: &PredictArgs, doc: &PosteriorFile, cfg: RunConfig) -> Result<(), CliError> {
    let q = doc.to_posterior()?;

    let x_raw = read_matrix_csv(&args.x)?;
    let x_star = transform_design(x_raw, doc.zscore.as_ref(), doc.intercept)?;
    if x_star.ncols() != doc.m {
        return Err(CliError::Data(format!(
            "prediction design has {} columns after preprocessing, posterior needs {}",
            x_star.ncols(),
            doc.m
        )));
    }

    let mode = match args.mode.to_lowercase().as_str() {
        "plugin" => PredictMode::PlugInMean,
        "mc" => PredictMode::MonteCarlo(cfg.predict_samples),
        other => {
            return Err(CliError::Config(format!(
                "mode must be plugin or mc, got {other}"
            )))
        }
    };

    let (target, weights) = match cfg.target.as_str() {
        "cbm" => (PredictTarget::Cbm, None),
        "cbc" => (PredictTarget::Cbc, None),
        "bma" => {
            let (w, le_cbm, le_cbc) = weights_from_training(doc, &q, &cfg)?;
            println!(
                "model weights: cbm {:.6} / cbc {:.6} (log evidence {:.3} / {:.3})",
                w.w_cbm, w.w_cbc, le_cbm, le_cbc
            );
            (PredictTarget::Bma(w), Some(w))
        }
        other => {
            return Err(CliError::Config(format!(
                "target must be cbm, cbc, or bma, got {other}"
            )))
        }
    };

    let pred = posterior_predictive(&q, x_star.view(), doc.link, &target, mode, cfg.seed)?;
    let labels: Vec<(usize, f64)> = predict_labels(&pred)
        .into_iter()
        .map(|lp| (lp.label, lp.credit))
        .collect();
    write_predictions(
        Path::new(&args.out),
        &pred.probs().to_owned(),
        &labels,
        weights.as_ref(),
    )?;
    println!("{} prediction rows -> {}", pred.n(), args.out);
    Ok(())
}
