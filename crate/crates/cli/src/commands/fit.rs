use std::path::Path;

use clap::Args;

use cb_core::cavi::{logit::logit_fit, probit::probit_fit, FitOptions, FitReport};
use cb_core::model::{Dataset, Link};
use cb_core::predict::PosteriorGaussian;

use crate::commands::{build_prior, transform_design};
use crate::config::ConfigArgs;
use crate::io::{read_labels_csv, read_matrix_csv, PosteriorFile, ZScoreStats};
use crate::CliError;

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Design matrix CSV (headerless floats).
    #[arg(long)]
    pub x: String,
    /// Label CSV (one 1-based integer per line).
    #[arg(long)]
    pub y: String,
    /// Category count; inferred from the largest label when omitted.
    #[arg(long)]
    pub categories: Option<usize>,
    /// Output posterior file.
    #[arg(long)]
    pub out: String,
    #[command(flatten)]
    pub config: ConfigArgs,
}

pub fn run(args: &FitArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    let x_raw = read_matrix_csv(&args.x)?;
    let y = read_labels_csv(&args.y)?;
    let k = args
        .categories
        .unwrap_or_else(|| y.iter().copied().max().unwrap_or(0));

    let zscore = cfg.zscore.then(|| ZScoreStats::fit(&x_raw));
    let x = transform_design(x_raw, zscore.as_ref(), cfg.intercept)?;
    let data = Dataset::new(x, y, k)?;
    let prior = build_prior(&cfg, data.m())?;
    let opts = FitOptions {
        max_iters: cfg.max_iters,
        elbo_drop_tol: cfg.elbo_drop_tol,
        workers: cfg.workers,
        compute_elbo: cfg.compute_elbo,
        ridge: cfg.ridge,
    };

    let start = std::time::Instant::now();
    let (posterior, report): (PosteriorGaussian, FitReport) = match cfg.link {
        Link::Probit => {
            let (state, report) = probit_fit(&data, &prior, &opts)?;
            (PosteriorGaussian::from_probit(&state), report)
        }
        Link::Logit => {
            let (state, report) = logit_fit(&data, &prior, &opts)?;
            (PosteriorGaussian::from_logit(&state), report)
        }
    };
    let wall = start.elapsed().as_secs_f64();

    let doc = PosteriorFile::from_posterior(
        &posterior,
        cfg.link,
        data.n(),
        report.elbo_trace.clone(),
        report.iterations,
        report.converged,
        cfg.intercept,
        zscore,
        &args.x,
        &args.y,
        &cfg,
    );
    doc.save(Path::new(&args.out))?;

    let normalized = report
        .elbo_trace
        .last()
        .map(|e| e / (data.n() as f64 * data.k() as f64));
    println!(
        "fit {:?} link on {} x {} ({} categories): {} sweeps, converged={}",
        cfg.link,
        data.n(),
        data.m(),
        data.k(),
        report.iterations,
        report.converged
    );
    match normalized {
        Some(v) => println!("final normalized objective {v:.6}"),
        None => println!("objective evaluation disabled"),
    }
    let mean_iter = if report.iter_seconds.is_empty() {
        0.0
    } else {
        report.iter_seconds.iter().sum::<f64>() / report.iter_seconds.len() as f64
    };
    println!("wall time {wall:.3}s total, {mean_iter:.4}s per sweep");
    println!("posterior -> {}", args.out);
    Ok(())
}
