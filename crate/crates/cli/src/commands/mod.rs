pub mod bma;
pub mod evaluate;
pub mod featurize;
pub mod fit;
pub mod predict;
pub mod simulate;

use ndarray::{Array1, Array2};

use cb_core::model::GaussianPrior;

use crate::config::RunConfig;
use crate::io::{read_matrix_csv, read_vector_csv, ZScoreStats};
use crate::CliError;

/// Build the weight prior from a resolved configuration: isotropic by
/// default, full mean vector and covariance when paths are given.
pub fn build_prior(cfg: &RunConfig, m: usize) -> Result<GaussianPrior, CliError> {
    let mean: Array1<f64> = match &cfg.prior_mean_path {
        Some(path) => read_vector_csv(path)?,
        None => Array1::from_elem(m, cfg.prior_mean),
    };
    let cov: Array2<f64> = match &cfg.prior_cov_path {
        Some(path) => read_matrix_csv(path)?,
        None => Array2::eye(m) * cfg.prior_var,
    };
    if mean.len() != m || cov.nrows() != m {
        return Err(CliError::Config(format!(
            "prior dimension {} does not match design dimension {m}",
            mean.len()
        )));
    }
    GaussianPrior::new(mean, cov).map_err(CliError::from)
}

/// Apply stored preprocessing to a raw design matrix: z-transform with
/// the given statistics, then prepend an intercept column if requested.
pub fn transform_design(
    mut x: Array2<f64>,
    zscore: Option<&ZScoreStats>,
    intercept: bool,
) -> Result<Array2<f64>, CliError> {
    if let Some(stats) = zscore {
        stats.apply(&mut x)?;
    }
    if intercept {
        let mut with_ones = Array2::<f64>::ones((x.nrows(), x.ncols() + 1));
        with_ones.slice_mut(ndarray::s![.., 1..]).assign(&x);
        x = with_ones;
    }
    Ok(x)
}
