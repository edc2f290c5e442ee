//! Variational engine for probit-link models.
//!
//! Truncated-normal augmentation makes every binary probit regression
//! conditionally Gaussian, so both block updates are closed form. The
//! posterior covariance `(Sigma0^{-1} + XᵀX)^{-1}` is shared by all
//! categories and constant over iterations, which is what keeps a sweep
//! at O(MNK).

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;

use crate::cavi::{improvement_below_tol, kl_to_prior, FitOptions, FitReport};
use crate::error::{CbError, Result};
use crate::linalg::{pairwise_sum, Cholesky};
use crate::model::{Dataset, GaussianPrior};
use crate::sparse::{SparseDesign, SparseExpectedZ};
use crate::special::{trunc_mean_shift, truncnorm_unit, TruncSide, LN_2PI};

/// Variational state of a probit fit.
///
/// Gaussian factors `N(mu_tilde_k, sigma_tilde)` on the weight columns
/// share one covariance; the auxiliary truncated-normal factors are fully
/// described by the tilted locations `eta_tilde = X mu_tilde`, which the
/// beta update keeps consistent after every sweep.
#[derive(Debug, Clone)]
pub struct ProbitState {
    mu_tilde: Array2<f64>,
    sigma_tilde: Array2<f64>,
    sigma_log_det: f64,
    eta_tilde: Array2<f64>,
    pub elbo_trace: Vec<f64>,
}

impl ProbitState {
    pub fn mu_tilde(&self) -> ArrayView2<'_, f64> {
        self.mu_tilde.view()
    }

    pub fn sigma_tilde(&self) -> ArrayView2<'_, f64> {
        self.sigma_tilde.view()
    }

    pub fn eta_tilde(&self) -> ArrayView2<'_, f64> {
        self.eta_tilde.view()
    }

    pub fn sigma_log_det(&self) -> f64 {
        self.sigma_log_det
    }

    /// Copy of this state with a different variational mean, tilted
    /// locations refreshed to match. The objective as a function of the
    /// mean alone (auxiliary factors kept at their conditional optimum)
    /// is what direct optimizers probe.
    pub fn with_mean(&self, mu: Array2<f64>, data: &Dataset) -> Result<Self> {
        if mu.dim() != self.mu_tilde.dim() {
            return Err(CbError::ShapeMismatch(format!(
                "mean is {:?}, state needs {:?}",
                mu.dim(),
                self.mu_tilde.dim()
            )));
        }
        let eta_tilde = data.x().dot(&mu);
        Ok(Self {
            mu_tilde: mu,
            sigma_tilde: self.sigma_tilde.clone(),
            sigma_log_det: self.sigma_log_det,
            eta_tilde,
            elbo_trace: Vec::new(),
        })
    }
}

fn side_of(labels: &[usize], i: usize, k: usize) -> TruncSide {
    TruncSide::from_bit(labels[i] == k + 1)
}

fn factor_posterior_precision(
    data: &Dataset,
    prior: &GaussianPrior,
    ridge: Option<f64>,
) -> Result<Cholesky> {
    let xtx = data.x().t().dot(&data.x());
    let precision = &prior.precision().to_owned() + &xtx;
    match Cholesky::factor(precision.view()) {
        Ok(c) => Ok(c),
        Err(_) => {
            if let Some(lambda) = ridge {
                let ridged = &precision + &(Array2::<f64>::eye(data.m()) * lambda);
                Cholesky::factor(ridged.view()).map_err(|_| {
                    CbError::NumericalFailure(format!(
                        "posterior precision not positive definite even with ridge {lambda}"
                    ))
                })
            } else {
                Err(CbError::NumericalFailure(
                    "posterior precision Sigma0^-1 + X'X not positive definite".into(),
                ))
            }
        }
    }
}

fn init_with_ridge(data: &Dataset, prior: &GaussianPrior, ridge: Option<f64>) -> Result<ProbitState> {
    if prior.dim() != data.m() {
        return Err(CbError::ShapeMismatch(format!(
            "prior dim {} vs {} covariates",
            prior.dim(),
            data.m()
        )));
    }
    let chol = factor_posterior_precision(data, prior, ridge)?;
    let sigma_tilde = chol.inverse();
    let sigma_log_det = -chol.log_det();
    Ok(ProbitState {
        mu_tilde: Array2::zeros((data.m(), data.k())),
        sigma_tilde,
        sigma_log_det,
        eta_tilde: Array2::zeros((data.n(), data.k())),
        elbo_trace: Vec::new(),
    })
}

/// Set up the state: shared covariance from the posterior precision, zero
/// variational means, zero tilted locations.
pub fn probit_init(data: &Dataset, prior: &GaussianPrior) -> Result<ProbitState> {
    init_with_ridge(data, prior, None)
}

/// Expectations of the truncated-normal auxiliary variables given the
/// current tilted locations: the location perturbed up for the label's
/// bit, down for every other bit.
pub fn probit_update_z(state: &ProbitState, data: &Dataset) -> Array2<f64> {
    let (n, k) = state.eta_tilde.dim();
    let labels = data.labels();
    let mut columns: Vec<Array1<f64>> = Vec::with_capacity(k);
    (0..k)
        .into_par_iter()
        .map(|cat| {
            let mut col = Array1::<f64>::zeros(n);
            for i in 0..n {
                let eta = state.eta_tilde[[i, cat]];
                col[i] = eta + trunc_mean_shift(eta, side_of(labels, i, cat));
            }
            col
        })
        .collect_into_vec(&mut columns);
    let mut out = Array2::<f64>::zeros((n, k));
    for (cat, col) in columns.into_iter().enumerate() {
        out.column_mut(cat).assign(&col);
    }
    out
}

/// Closed-form update of every variational mean column, followed by a
/// refresh of the tilted locations so the state stays consistent.
pub fn probit_update_beta(
    state: &mut ProbitState,
    data: &Dataset,
    prior: &GaussianPrior,
    expected_z: &Array2<f64>,
) {
    let xt_ez = data.x().t().dot(expected_z);
    let mut rhs = xt_ez;
    for mut col in rhs.columns_mut() {
        col += &prior.precision_mean();
    }
    state.mu_tilde = state.sigma_tilde.dot(&rhs);
    state.eta_tilde = data.x().dot(&state.mu_tilde);
}

/// The surrogate objective in closed form.
///
/// Valid whenever the tilted locations equal `X mu_tilde`, which
/// `probit_update_beta` maintains. Energy, auxiliary entropy, and the
/// per-category Gaussian KL to the prior are reduced by pairwise sums in
/// a fixed order.
pub fn probit_elbo(state: &ProbitState, data: &Dataset, prior: &GaussianPrior) -> f64 {
    let (n, k) = state.eta_tilde.dim();
    let labels = data.labels();

    // x_i' Sigma x_i is category-independent because the covariance is shared
    let x_sigma = data.x().dot(&state.sigma_tilde);
    let quad: Vec<f64> = (0..n)
        .map(|i| x_sigma.row(i).dot(&data.x().row(i)))
        .collect();

    let mut per_category: Vec<f64> = Vec::with_capacity(k);
    (0..k)
        .into_par_iter()
        .map(|cat| {
            let mut terms = Vec::with_capacity(n);
            for i in 0..n {
                let side = side_of(labels, i, cat);
                let eta = state.eta_tilde[[i, cat]];
                let moments = truncnorm_unit(eta, side).expect("finite tilted location");
                let energy = -0.5 * (LN_2PI + 1.0) + 0.5 * eta * (moments.mean - eta)
                    - 0.5 * quad[i];
                terms.push(energy + moments.entropy);
            }
            let kl = kl_to_prior(
                state.mu_tilde.column(cat),
                state.sigma_tilde.view(),
                state.sigma_log_det,
                prior,
            );
            pairwise_sum(&terms) - kl
        })
        .collect_into_vec(&mut per_category);
    pairwise_sum(&per_category)
}

/// Run sweeps of the two block updates until the normalized objective
/// improvement drops below tolerance or the iteration cap is hit.
pub fn probit_fit(
    data: &Dataset,
    prior: &GaussianPrior,
    opts: &FitOptions,
) -> Result<(ProbitState, FitReport)> {
    let mut state = init_with_ridge(data, prior, opts.ridge)?;
    let pool = opts.thread_pool();
    let mut iter_seconds = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    pool.install(|| {
        if opts.compute_elbo {
            let e0 = probit_elbo(&state, data, prior);
            state.elbo_trace.push(e0);
        }
        for _ in 0..opts.max_iters {
            let start = Instant::now();
            let expected_z = probit_update_z(&state, data);
            probit_update_beta(&mut state, data, prior, &expected_z);
            iterations += 1;
            iter_seconds.push(start.elapsed().as_secs_f64());
            if opts.compute_elbo {
                let elbo = probit_elbo(&state, data, prior);
                let prev = *state.elbo_trace.last().expect("trace seeded");
                state.elbo_trace.push(elbo);
                if improvement_below_tol(prev, elbo, data.n(), data.k(), opts.elbo_drop_tol) {
                    converged = true;
                    break;
                }
            }
        }
    });

    let report = FitReport {
        elbo_trace: state.elbo_trace.clone(),
        iterations,
        converged,
        iter_seconds,
    };
    Ok((state, report))
}

/// Auxiliary expectations over a sparse design without materializing the
/// dense `N x K` matrix.
///
/// Tilted locations are recomputed from the sparse rows; entries where the
/// location is exactly zero collapse to `+2 phi(0)` on the label's column
/// and `-2 phi(0)` elsewhere and are stored implicitly.
pub fn probit_expected_z_sparse(
    state: &ProbitState,
    x: &SparseDesign,
    labels: &[usize],
) -> Result<SparseExpectedZ> {
    let k = state.mu_tilde.ncols();
    if x.m() != state.mu_tilde.nrows() {
        return Err(CbError::ShapeMismatch(format!(
            "sparse design has {} columns, state has {} covariate rows",
            x.m(),
            state.mu_tilde.nrows()
        )));
    }
    let mut out = SparseExpectedZ::new(x.n(), k, labels)?;
    for i in 0..x.n() {
        let mut general = Vec::new();
        let mut zero_cats = Vec::new();
        for cat in 0..k {
            let eta = x.row_dot(i, state.mu_tilde.column(cat));
            if eta == 0.0 {
                zero_cats.push(cat as u32);
            } else {
                let ez = eta + trunc_mean_shift(eta, side_of(labels, i, cat));
                general.push((cat as u32, ez));
            }
        }
        out.set_row(i, general, zero_cats);
    }
    Ok(out)
}
