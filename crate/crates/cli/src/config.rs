//! Run configuration: defaults, flat config files, and flag overrides.
//!
//! A config file is a flat `key = value` document mirroring [`RunConfig`];
//! every key can also be set by a command-line flag of the same name.
//! Resolution layers a file patch and then the flags over a base config
//! (the defaults for `fit`, the posterior's echoed config for `predict`).

use clap::Args;
use serde::{Deserialize, Serialize};

use cb_core::model::Link;

use crate::CliError;

/// Fully resolved run configuration, echoed into posterior files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub link: Link,
    /// Prediction target: "cbm", "cbc", or "bma".
    pub target: String,
    pub prior_mean: f64,
    pub prior_var: f64,
    /// Optional CSV with a full prior mean vector (one value per line).
    pub prior_mean_path: Option<String>,
    /// Optional CSV with a full prior covariance matrix.
    pub prior_cov_path: Option<String>,
    pub max_iters: usize,
    pub elbo_drop_tol: f64,
    pub compute_elbo: bool,
    pub workers: usize,
    /// Prepend a column of ones to the design matrix.
    pub intercept: bool,
    /// Z-transform covariate columns; the stats travel with the posterior.
    pub zscore: bool,
    /// Optional ridge retry multiple for a failed SPD factorization.
    pub ridge: Option<f64>,
    /// Monte Carlo samples for evidence estimation.
    pub evidence_samples: usize,
    /// Monte Carlo draws for sampled predictions.
    pub predict_samples: usize,
    pub seed: u64,
    /// Model prior on the marginalization construction; the conditioning
    /// construction gets the complement.
    pub pi_cbm: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            link: Link::Probit,
            target: "bma".into(),
            prior_mean: 0.0,
            prior_var: 1.0,
            prior_mean_path: None,
            prior_cov_path: None,
            max_iters: 100,
            elbo_drop_tol: 0.1,
            compute_elbo: true,
            workers: 1,
            intercept: false,
            zscore: false,
            ridge: None,
            evidence_samples: 100,
            predict_samples: 100,
            seed: 0,
            pi_cbm: 0.5,
        }
    }
}

/// Partial configuration: only the keys present in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfigPatch {
    link: Option<Link>,
    target: Option<String>,
    prior_mean: Option<f64>,
    prior_var: Option<f64>,
    prior_mean_path: Option<String>,
    prior_cov_path: Option<String>,
    max_iters: Option<usize>,
    elbo_drop_tol: Option<f64>,
    compute_elbo: Option<bool>,
    workers: Option<usize>,
    intercept: Option<bool>,
    zscore: Option<bool>,
    ridge: Option<f64>,
    evidence_samples: Option<usize>,
    predict_samples: Option<usize>,
    seed: Option<u64>,
    pi_cbm: Option<f64>,
}

macro_rules! overlay {
    ($cfg:expr, $src:expr, [$($field:ident),* $(,)?]) => {
        $(if let Some(v) = $src.$field.clone() { $cfg.$field = v; })*
    };
}

/// Command-line overrides for [`RunConfig`] keys.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Flat key = value config file; flags below override its keys.
    #[arg(long)]
    pub config: Option<String>,
    /// Inverse link: probit or logit.
    #[arg(long)]
    pub link: Option<String>,
    /// Prediction target: cbm, cbc, or bma.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub prior_mean: Option<f64>,
    #[arg(long)]
    pub prior_var: Option<f64>,
    #[arg(long)]
    pub prior_mean_path: Option<String>,
    #[arg(long)]
    pub prior_cov_path: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub elbo_drop_tol: Option<f64>,
    #[arg(long)]
    pub compute_elbo: Option<bool>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub intercept: Option<bool>,
    #[arg(long)]
    pub zscore: Option<bool>,
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long)]
    pub evidence_samples: Option<usize>,
    #[arg(long)]
    pub predict_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub pi_cbm: Option<f64>,
}

impl ConfigArgs {
    /// Resolve against the built-in defaults.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        self.resolve_over(RunConfig::default())
    }

    /// Resolve against an explicit base configuration.
    pub fn resolve_over(&self, base: RunConfig) -> Result<RunConfig, CliError> {
        let mut cfg = base;
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {path}: {e}")))?;
            let patch: RunConfigPatch = toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("bad config {path}: {e}")))?;
            overlay!(
                cfg,
                patch,
                [
                    link,
                    target,
                    prior_mean,
                    prior_var,
                    max_iters,
                    elbo_drop_tol,
                    compute_elbo,
                    workers,
                    intercept,
                    zscore,
                    evidence_samples,
                    predict_samples,
                    seed,
                    pi_cbm,
                ]
            );
            if patch.prior_mean_path.is_some() {
                cfg.prior_mean_path = patch.prior_mean_path;
            }
            if patch.prior_cov_path.is_some() {
                cfg.prior_cov_path = patch.prior_cov_path;
            }
            if patch.ridge.is_some() {
                cfg.ridge = patch.ridge;
            }
        }
        if let Some(link) = &self.link {
            cfg.link = parse_link(link)?;
        }
        if let Some(target) = &self.target {
            cfg.target = target.to_lowercase();
        }
        overlay!(
            cfg,
            self,
            [
                prior_mean,
                prior_var,
                max_iters,
                elbo_drop_tol,
                compute_elbo,
                workers,
                intercept,
                zscore,
                evidence_samples,
                predict_samples,
                seed,
                pi_cbm,
            ]
        );
        if self.prior_mean_path.is_some() {
            cfg.prior_mean_path = self.prior_mean_path.clone();
        }
        if self.prior_cov_path.is_some() {
            cfg.prior_cov_path = self.prior_cov_path.clone();
        }
        if self.ridge.is_some() {
            cfg.ridge = self.ridge;
        }
        if !["cbm", "cbc", "bma"].contains(&cfg.target.as_str()) {
            return Err(CliError::Config(format!(
                "target must be cbm, cbc, or bma, got {}",
                cfg.target
            )));
        }
        if !(0.0..=1.0).contains(&cfg.pi_cbm) {
            return Err(CliError::Config(format!(
                "pi_cbm must lie in [0, 1], got {}",
                cfg.pi_cbm
            )));
        }
        Ok(cfg)
    }
}

pub fn parse_link(s: &str) -> Result<Link, CliError> {
    match s.to_lowercase().as_str() {
        "probit" => Ok(Link::Probit),
        "logit" => Ok(Link::Logit),
        other => Err(CliError::Config(format!(
            "link must be probit or logit, got {other}"
        ))),
    }
}
