//! Core data model and exact likelihood evaluation.
//!
//! A categorical regression couples an `N x M` design matrix with integer
//! labels in `1..=K` and a weight matrix `B` whose column `k` scores
//! category `k` through a strictly increasing link cdf `H`. Two categorical
//! likelihoods are built from the per-bit success probabilities of the
//! independent-binary (IB) model over one-hot outcomes:
//!
//! * `Cbm` normalizes the marginal success probabilities `H(eta_k)`.
//! * `Cbc` conditions the IB model on one-hot outcomes, equivalently a
//!   normalized-odds model over `H/(1-H)`.
//!
//! Both dominate the IB likelihood of the corresponding one-hot vector,
//! which is what licenses fitting the IB surrogate in their place.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{CbError, Result};
use crate::linalg::Cholesky;
use crate::special::{
    inverse_std_normal_cdf, log_std_normal_cdf, softplus, std_logistic_cdf, std_normal_cdf,
};

/// Regression weights, one column per category.
pub type Weights = Array2<f64>;

/// Inverse link: the cdf mapping a linear predictor into (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Probit,
    Logit,
}

impl Link {
    /// H(x).
    #[inline]
    pub fn h(self, x: f64) -> f64 {
        match self {
            Link::Probit => std_normal_cdf(x),
            Link::Logit => std_logistic_cdf(x),
        }
    }

    /// log H(x), stable on the left tail.
    #[inline]
    pub fn log_h(self, x: f64) -> f64 {
        match self {
            Link::Probit => log_std_normal_cdf(x),
            Link::Logit => -softplus(-x),
        }
    }

    /// log (1 - H(x)), stable on the right tail.
    #[inline]
    pub fn log_one_minus_h(self, x: f64) -> f64 {
        match self {
            Link::Probit => log_std_normal_cdf(-x),
            Link::Logit => -softplus(x),
        }
    }

    /// log odds log[H/(1-H)]; the identity for the logit link.
    #[inline]
    pub fn log_odds(self, x: f64) -> f64 {
        match self {
            Link::Probit => log_std_normal_cdf(x) - log_std_normal_cdf(-x),
            Link::Logit => x,
        }
    }

    /// H^{-1}(p).
    pub fn h_inv(self, p: f64) -> f64 {
        debug_assert!(p > 0.0 && p < 1.0);
        match self {
            Link::Probit => inverse_std_normal_cdf(p),
            Link::Logit => (p / (1.0 - p)).ln(),
        }
    }
}

/// How categorical probabilities are built from the IB bit probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    /// Normalize the marginal success probabilities.
    Cbm,
    /// Condition on a one-hot outcome (normalized odds).
    Cbc,
}

/// A categorical training set: covariates, labels in `1..=K`, and `K`.
///
/// No intercept column is added implicitly; callers that want one prepend
/// it themselves.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Array2<f64>,
    y: Vec<usize>,
    k: usize,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<usize>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(CbError::InvalidData(format!("need K >= 2 categories, got {k}")));
        }
        if x.nrows() == 0 {
            return Err(CbError::InvalidData("empty design matrix".into()));
        }
        if x.nrows() != y.len() {
            return Err(CbError::ShapeMismatch(format!(
                "{} design rows vs {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(CbError::InvalidData(format!("non-finite covariate {bad}")));
        }
        for &label in &y {
            if label < 1 || label > k {
                return Err(CbError::InvalidLabel { label, k });
            }
        }
        Ok(Self { x, y, k })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn one_hot(&self) -> OneHot {
        one_hot(&self.y, self.k).expect("labels validated at construction")
    }
}

/// One-hot encoding of labels: each row has a single 1 at the label index.
#[derive(Debug, Clone)]
pub struct OneHot {
    matrix: Array2<f64>,
}

impl OneHot {
    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    /// Whether observation `i` carries bit `k` (0-based column).
    #[inline]
    pub fn bit(&self, i: usize, k: usize) -> bool {
        self.matrix[[i, k]] == 1.0
    }
}

/// Encode 1-based labels as an `N x K` binary matrix with unit row sums.
pub fn one_hot(y: &[usize], k: usize) -> Result<OneHot> {
    let mut matrix = Array2::<f64>::zeros((y.len(), k));
    for (i, &label) in y.iter().enumerate() {
        if label < 1 || label > k {
            return Err(CbError::InvalidLabel { label, k });
        }
        matrix[[i, label - 1]] = 1.0;
    }
    Ok(OneHot { matrix })
}

/// Shared Gaussian prior N(mu0, Sigma0) on every category's weight column.
#[derive(Debug, Clone)]
pub struct GaussianPrior {
    mu0: Array1<f64>,
    sigma0: Array2<f64>,
    precision: Array2<f64>,
    precision_mean: Array1<f64>,
    log_det_cov: f64,
}

impl GaussianPrior {
    pub fn new(mu0: Array1<f64>, sigma0: Array2<f64>) -> Result<Self> {
        if sigma0.nrows() != mu0.len() || sigma0.ncols() != mu0.len() {
            return Err(CbError::ShapeMismatch(format!(
                "prior mean dim {} vs covariance {}x{}",
                mu0.len(),
                sigma0.nrows(),
                sigma0.ncols()
            )));
        }
        let chol = Cholesky::factor(sigma0.view())?;
        let precision = chol.inverse();
        let precision_mean = precision.dot(&mu0);
        let log_det_cov = chol.log_det();
        Ok(Self {
            mu0,
            sigma0,
            precision,
            precision_mean,
            log_det_cov,
        })
    }

    /// N(mean * 1, var * I) in `m` dimensions.
    pub fn isotropic(m: usize, mean: f64, var: f64) -> Result<Self> {
        if var <= 0.0 || !var.is_finite() || !mean.is_finite() {
            return Err(CbError::InvalidCovariance(format!(
                "isotropic prior needs finite mean and positive variance, got ({mean}, {var})"
            )));
        }
        Self::new(Array1::from_elem(m, mean), Array2::eye(m) * var)
    }

    /// Standard N(0, I) prior.
    pub fn standard(m: usize) -> Self {
        Self::isotropic(m, 0.0, 1.0).expect("unit variance is valid")
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    pub fn mean(&self) -> ArrayView1<'_, f64> {
        self.mu0.view()
    }

    pub fn covariance(&self) -> ArrayView2<'_, f64> {
        self.sigma0.view()
    }

    /// Sigma0^{-1}.
    pub fn precision(&self) -> ArrayView2<'_, f64> {
        self.precision.view()
    }

    /// Sigma0^{-1} mu0.
    pub fn precision_mean(&self) -> ArrayView1<'_, f64> {
        self.precision_mean.view()
    }

    /// log |Sigma0|.
    pub fn log_det_cov(&self) -> f64 {
        self.log_det_cov
    }
}

/// Linear predictor matrix `eta = X B`.
pub fn linear_predictor(b: ArrayView2<'_, f64>, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if b.nrows() != x.ncols() {
        return Err(CbError::ShapeMismatch(format!(
            "weights have {} rows but design has {} columns",
            b.nrows(),
            x.ncols()
        )));
    }
    Ok(x.dot(&b))
}

/// Unnormalized log category scores for one linear-predictor row.
fn log_potentials(eta: ArrayView1<'_, f64>, link: Link, construction: Construction) -> Array1<f64> {
    match construction {
        Construction::Cbm => eta.mapv(|e| link.log_h(e)),
        Construction::Cbc => eta.mapv(|e| link.log_odds(e)),
    }
}

/// Log category probabilities for one row, normalized in log space.
pub fn log_category_probs(
    eta: ArrayView1<'_, f64>,
    link: Link,
    construction: Construction,
) -> Result<Array1<f64>> {
    if let Some(bad) = eta.iter().find(|v| !v.is_finite()) {
        return Err(CbError::InvalidData(format!(
            "non-finite linear predictor {bad}"
        )));
    }
    let mut pots = log_potentials(eta, link, construction);
    let max = pots.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    pots.mapv_inplace(|v| v - max);
    let lse = pots.iter().map(|v| v.exp()).sum::<f64>().ln();
    pots.mapv_inplace(|v| v - lse);
    Ok(pots)
}

/// Category probabilities for one row: nonnegative, summing to one.
pub fn category_probs(
    eta: ArrayView1<'_, f64>,
    link: Link,
    construction: Construction,
) -> Result<Array1<f64>> {
    Ok(log_category_probs(eta, link, construction)?.mapv(f64::exp))
}

/// Log likelihood of a binary matrix under the independent-binary model:
/// every bit is its own Bernoulli(H(eta)) regression.
pub fn ib_log_likelihood(
    b: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    ybar: &OneHot,
    link: Link,
) -> Result<f64> {
    let eta = linear_predictor(b, x)?;
    if eta.dim() != ybar.matrix().dim() {
        return Err(CbError::ShapeMismatch(format!(
            "predictor {:?} vs one-hot {:?}",
            eta.dim(),
            ybar.matrix().dim()
        )));
    }
    let mut total = 0.0;
    for ((i, k), &e) in eta.indexed_iter() {
        total += if ybar.bit(i, k) {
            link.log_h(e)
        } else {
            link.log_one_minus_h(e)
        };
    }
    Ok(total)
}

/// Log likelihood of integer labels under a categorical-from-binary model.
pub fn cb_log_likelihood(
    b: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    link: Link,
    construction: Construction,
) -> Result<f64> {
    let eta = linear_predictor(b, x)?;
    if eta.nrows() != y.len() {
        return Err(CbError::ShapeMismatch(format!(
            "{} predictor rows vs {} labels",
            eta.nrows(),
            y.len()
        )));
    }
    let k = eta.ncols();
    let mut total = 0.0;
    for (i, &label) in y.iter().enumerate() {
        if label < 1 || label > k {
            return Err(CbError::InvalidLabel { label, k });
        }
        let logp = log_category_probs(eta.row(i), link, construction)?;
        total += logp[label - 1];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    #[test]
    fn one_hot_examples() {
        let oh = one_hot(&[1, 3, 2], 3).unwrap();
        assert_eq!(
            oh.matrix(),
            array![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]
        );
        let oh2 = one_hot(&[2, 2], 2).unwrap();
        assert_eq!(oh2.matrix(), array![[0.0, 1.0], [0.0, 1.0]]);
    }

    #[test]
    fn one_hot_rejects_out_of_range() {
        assert!(matches!(
            one_hot(&[1, 4], 3),
            Err(CbError::InvalidLabel { label: 4, k: 3 })
        ));
        assert!(one_hot(&[0], 3).is_err());
    }

    #[test]
    fn linear_predictor_examples() {
        let x = array![[2.0]];
        let b = array![[0.5, -1.0]];
        let eta = linear_predictor(b.view(), x.view()).unwrap();
        assert_eq!(eta, array![[1.0, -2.0]]);

        let mismatched = Array2::<f64>::zeros((2, 2));
        assert!(linear_predictor(mismatched.view(), array![[1.0], [2.0]].view()).is_err());

        let b0 = Array2::<f64>::zeros((3, 4));
        let x0 = array![[1.0, 2.0, 3.0], [0.0, -1.0, 0.5]];
        let eta00 = linear_predictor(b0.view(), x0.view()).unwrap();
        assert!(eta00.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_predictor_column_permutation() {
        let x = array![[1.0, -0.5], [0.3, 2.0]];
        let b = array![[0.2, -1.0, 0.7], [1.5, 0.0, -0.3]];
        let eta = linear_predictor(b.view(), x.view()).unwrap();
        let perm = [2usize, 0, 1];
        let mut b_perm = Array2::<f64>::zeros(b.dim());
        for (dst, &src) in perm.iter().enumerate() {
            b_perm.column_mut(dst).assign(&b.column(src));
        }
        let eta_perm = linear_predictor(b_perm.view(), x.view()).unwrap();
        for (dst, &src) in perm.iter().enumerate() {
            assert_eq!(eta_perm.column(dst), eta.column(src));
        }
    }

    #[test]
    fn category_probs_uniform_at_zero() {
        let eta = array![0.0, 0.0, 0.0];
        for link in [Link::Probit, Link::Logit] {
            for construction in [Construction::Cbm, Construction::Cbc] {
                let p = category_probs(eta.view(), link, construction).unwrap();
                for &v in p.iter() {
                    assert!((v - 1.0 / 3.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn category_probs_known_values() {
        // odds are 3 and 1 under the logit link
        let p = category_probs(
            array![3.0_f64.ln(), 0.0].view(),
            Link::Logit,
            Construction::Cbc,
        )
        .unwrap();
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);

        // Phi(1) + Phi(-1) = 1, so the normalizer is exactly one
        let q = category_probs(array![1.0, -1.0].view(), Link::Probit, Construction::Cbm).unwrap();
        assert!((q[0] - 0.8413447461).abs() < 1e-10);
        assert!((q[1] - 0.1586552539).abs() < 1e-10);
    }

    #[test]
    fn category_probs_survive_extreme_underflow() {
        let eta = array![-500.0, -500.0, -480.0];
        for link in [Link::Probit, Link::Logit] {
            for construction in [Construction::Cbm, Construction::Cbc] {
                let p = category_probs(eta.view(), link, construction).unwrap();
                assert!(p.iter().all(|v| v.is_finite()));
                assert!((p.sum() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ib_log_likelihood_at_zero_weights() {
        let b = Array2::<f64>::zeros((2, 3));
        let x = array![[0.4, -1.0]];
        let ybar = one_hot(&[2], 3).unwrap();
        for link in [Link::Probit, Link::Logit] {
            let ll = ib_log_likelihood(b.view(), x.view(), &ybar, link).unwrap();
            assert!((ll - (-2.0794415417)).abs() < 1e-9);
        }
        // generalization: N*K bits each worth ln 2
        let n = 7;
        let k = 4;
        let bx = Array2::<f64>::zeros((3, k));
        let xs = Array2::<f64>::zeros((n, 3));
        let yb = one_hot(&vec![1; n], k).unwrap();
        let ll = ib_log_likelihood(bx.view(), xs.view(), &yb, Link::Logit).unwrap();
        assert!((ll - (-(n as f64) * (k as f64) * 2.0_f64.ln())).abs() < 1e-10);
    }

    #[test]
    fn ib_log_likelihood_matches_scalar_sum() {
        // independent scalar accumulation over a tiny fixed case
        let b = array![[0.7, -0.2]];
        let x = array![[1.5], [-0.4]];
        let y = vec![1usize, 2];
        let ybar = one_hot(&y, 2).unwrap();
        for link in [Link::Probit, Link::Logit] {
            let mut expected = 0.0;
            for i in 0..2 {
                for k in 0..2 {
                    let eta = x[[i, 0]] * b[[0, k]];
                    let h: f64 = link.h(eta);
                    expected += if y[i] == k + 1 { h.ln() } else { (1.0 - h).ln() };
                }
            }
            let got = ib_log_likelihood(b.view(), x.view(), &ybar, link).unwrap();
            assert!((got - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn cb_log_likelihood_at_zero_weights() {
        let b = Array2::<f64>::zeros((2, 3));
        let x = array![[0.4, -1.0]];
        let ll = cb_log_likelihood(b.view(), x.view(), &[1], Link::Probit, Construction::Cbm)
            .unwrap();
        assert!((ll - (1.0_f64 / 3.0).ln()).abs() < 1e-12);
        // the categorical likelihood dominates the binary one at B = 0
        let ybar = one_hot(&[1], 3).unwrap();
        let ib = ib_log_likelihood(b.view(), x.view(), &ybar, Link::Probit).unwrap();
        assert!(ll > ib);
    }

    #[test]
    fn cb_dominates_ib_on_random_draws() {
        let mut rng = StdRng::seed_from_u64(7);
        for trial in 0..1000 {
            let m = 1 + trial % 3;
            let k = 2 + trial % 4;
            let b = Array2::from_shape_fn((m, k), |_| rng.sample::<f64, _>(StandardNormal));
            let x = Array2::from_shape_fn((1, m), |_| rng.sample::<f64, _>(StandardNormal));
            let y = vec![1 + rng.random_range(0..k)];
            let ybar = one_hot(&y, k).unwrap();
            for link in [Link::Probit, Link::Logit] {
                let ib = ib_log_likelihood(b.view(), x.view(), &ybar, link).unwrap();
                for construction in [Construction::Cbm, Construction::Cbc] {
                    let cb = cb_log_likelihood(b.view(), x.view(), &y, link, construction).unwrap();
                    assert!(
                        cb > ib,
                        "bound violated: cb={cb}, ib={ib}, link={link:?}, c={construction:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn cbc_normalized_odds_matches_product_form() {
        // small-K product-form oracle for the conditioning construction
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let k = 2 + rng.random_range(0..4);
            let eta = Array1::from_shape_fn(k, |_| 3.0 * rng.sample::<f64, _>(StandardNormal));
            for link in [Link::Probit, Link::Logit] {
                let fast = category_probs(eta.view(), link, Construction::Cbc).unwrap();
                let hs: Vec<f64> = eta.iter().map(|&e| link.h(e)).collect();
                let mut pots = vec![0.0; k];
                for kk in 0..k {
                    let mut pot = hs[kk];
                    for (j, &hj) in hs.iter().enumerate() {
                        if j != kk {
                            pot *= 1.0 - hj;
                        }
                    }
                    pots[kk] = pot;
                }
                let z: f64 = pots.iter().sum();
                for kk in 0..k {
                    assert!((fast[kk] - pots[kk] / z).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn argmax_equivalence_on_random_rows() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..300 {
            let k = 2 + rng.random_range(0..6);
            let eta = Array1::from_shape_fn(k, |_| 2.0 * rng.sample::<f64, _>(StandardNormal));
            let eta_argmax = eta
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            for link in [Link::Probit, Link::Logit] {
                for construction in [Construction::Cbm, Construction::Cbc] {
                    let p = category_probs(eta.view(), link, construction).unwrap();
                    let p_argmax = p
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                        .unwrap()
                        .0;
                    assert_eq!(p_argmax, eta_argmax);
                }
            }
        }
    }

    #[test]
    fn intercepts_only_identifiability() {
        // beta_k = H^{-1}(p_k) reproduces p under Cbm exactly; under Cbc
        // only when p is uniform.
        let p = array![0.5, 0.3, 0.2];
        for link in [Link::Probit, Link::Logit] {
            let eta = p.mapv(|pk| link.h_inv(pk));
            let probs = category_probs(eta.view(), link, Construction::Cbm).unwrap();
            for i in 0..3 {
                assert!((probs[i] - p[i]).abs() < 1e-10, "{link:?}: {probs:?}");
            }
            let cbc = category_probs(eta.view(), link, Construction::Cbc).unwrap();
            assert!((cbc[0] - p[0]).abs() > 1e-3);
        }
        let uniform = array![0.25, 0.25, 0.25, 0.25];
        for link in [Link::Probit, Link::Logit] {
            let eta = uniform.mapv(|pk| link.h_inv(pk));
            let cbc = category_probs(eta.view(), link, Construction::Cbc).unwrap();
            for i in 0..4 {
                assert!((cbc[i] - 0.25).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dataset_validation() {
        let x = array![[1.0], [2.0]];
        assert!(Dataset::new(x.clone(), vec![1, 2], 2).is_ok());
        assert!(Dataset::new(x.clone(), vec![1, 3], 2).is_err());
        assert!(Dataset::new(x.clone(), vec![1], 2).is_err());
        assert!(Dataset::new(x.clone(), vec![1, 2], 1).is_err());
        let bad = array![[f64::NAN], [2.0]];
        assert!(Dataset::new(bad, vec![1, 2], 2).is_err());
    }

    proptest! {
        #[test]
        fn one_hot_argmax_roundtrip(y in proptest::collection::vec(1usize..=7, 1..40)) {
            let oh = one_hot(&y, 7).unwrap();
            for (i, &label) in y.iter().enumerate() {
                let row = oh.matrix().row(i).to_owned();
                prop_assert_eq!(row.sum(), 1.0);
                let argmax = row.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
                prop_assert_eq!(argmax + 1, label);
            }
        }

        #[test]
        fn category_probs_form_a_simplex(
            eta in proptest::collection::vec(-30.0f64..30.0, 2..8),
            probit in any::<bool>(),
            cbm in any::<bool>(),
        ) {
            let eta = Array1::from_vec(eta);
            let link = if probit { Link::Probit } else { Link::Logit };
            let construction = if cbm { Construction::Cbm } else { Construction::Cbc };
            let p = category_probs(eta.view(), link, construction).unwrap();
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.sum() - 1.0).abs() < 1e-12);
        }
    }
}
