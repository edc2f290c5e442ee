//! Coordinate-ascent variational inference engines.
//!
//! Both engines fit the independent-binary surrogate of a categorical
//! model: the probit engine augments with truncated normals, the logit
//! engine with Polya-Gamma variables. Per-category updates are
//! independent, so the engines parallelize over categories and must
//! return bit-identical results for any worker count; objective
//! reductions use pairwise summation in a fixed order to keep that true.

use ndarray::{ArrayView1, ArrayView2};

use crate::linalg::trace_prod;
use crate::model::GaussianPrior;

pub mod logit;
pub mod probit;

/// Options controlling a variational fit.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Hard cap on the number of sweeps.
    pub max_iters: usize,
    /// Converged when the per-(N*K) objective improvement between
    /// consecutive sweeps falls below this.
    pub elbo_drop_tol: f64,
    /// Worker threads for per-category parallelism.
    pub workers: usize,
    /// Evaluate the objective every sweep. Disabling skips convergence
    /// checks and runs to `max_iters`.
    pub compute_elbo: bool,
    /// Retry a failed posterior-precision factorization once after adding
    /// this multiple of the identity. Off by default.
    pub ridge: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            elbo_drop_tol: 0.1,
            workers: 1,
            compute_elbo: true,
            ridge: None,
        }
    }
}

impl FitOptions {
    pub(crate) fn thread_pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .expect("thread pool construction")
    }
}

/// What a fit did: objective trace, sweep count, convergence, timings.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// Objective value at initialization followed by one entry per sweep.
    pub elbo_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Wall time of each sweep in seconds.
    pub iter_seconds: Vec<f64>,
}

/// KL from `N(mu, Sigma)` to the prior, reusing the prior's cached
/// precision and log-determinant. `sigma_log_det` is log |Sigma|.
pub(crate) fn kl_to_prior(
    mu: ArrayView1<'_, f64>,
    sigma: ArrayView2<'_, f64>,
    sigma_log_det: f64,
    prior: &GaussianPrior,
) -> f64 {
    let d = mu.len() as f64;
    let diff = &mu.to_owned() - &prior.mean();
    let maha = diff.dot(&prior.precision().dot(&diff));
    let tr = trace_prod(prior.precision(), sigma);
    0.5 * (prior.log_det_cov() - sigma_log_det - d + maha + tr)
}

/// Per-sweep convergence test on the size-normalized objective change.
pub(crate) fn improvement_below_tol(prev: f64, curr: f64, n: usize, k: usize, tol: f64) -> bool {
    (curr - prev) / (n as f64 * k as f64) < tol
}
