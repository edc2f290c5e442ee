use std::path::Path;

use clap::Args;
use serde::Serialize;

use crate::commands::predict::weights_from_training;
use crate::config::ConfigArgs;
use crate::io::{atomic_write, PosteriorFile};
use crate::CliError;

#[derive(Debug, Args)]
pub struct BmaWeightsArgs {
    /// Posterior file from `fit`; evidence uses its recorded training data.
    #[arg(long)]
    pub posterior: String,
    /// Optional JSON output path (weights print to stdout regardless).
    #[arg(long)]
    pub out: Option<String>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Serialize)]
struct WeightsDoc {
    version: u32,
    w_cbm: f64,
    w_cbc: f64,
    prior_cbm: f64,
    prior_cbc: f64,
    log_evidence_cbm: f64,
    log_evidence_cbc: f64,
    evidence_samples: usize,
    seed: u64,
}

pub fn run(args: &BmaWeightsArgs) -> Result<(), CliError> {
    let doc = PosteriorFile::load(&args.posterior)?;
    let cfg = args.config.resolve_over(doc.config.clone())?;
    let q = doc.to_posterior()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
    let (weights, log_ev_cbm, log_ev_cbc) =
        pool.install(|| weights_from_training(&doc, &q, &cfg))?;

    let out = WeightsDoc {
        version: 1,
        w_cbm: weights.w_cbm,
        w_cbc: weights.w_cbc,
        prior_cbm: weights.prior_cbm,
        prior_cbc: weights.prior_cbc,
        log_evidence_cbm: log_ev_cbm,
        log_evidence_cbc: log_ev_cbc,
        evidence_samples: cfg.evidence_samples,
        seed: cfg.seed,
    };
    let mut json = serde_json::to_string_pretty(&out)
        .map_err(|e| CliError::Data(format!("cannot serialize weights: {e}")))?;
    json.push('\n');
    println!("{json}");
    if let Some(path) = &args.out {
        atomic_write(Path::new(path), json.as_bytes())?;
    }
    Ok(())
}
