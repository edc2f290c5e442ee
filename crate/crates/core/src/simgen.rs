//! Simulation generator, evaluation metrics, reference baselines, and the
//! event-sequence featurizer.
//!
//! Simulated datasets come from a softmax model whose weights have a
//! block variance structure: each category gets a group of covariates
//! with high-variance weights, so one knob controls how predictable the
//! labels are from the covariates. The module also carries the metrics
//! used to score predictions, a softmax maximum-likelihood baseline, the
//! training-frequency baseline, and the exponential-decay featurizer for
//! timestamped event streams.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CbError, Result};
use crate::model::{one_hot, Dataset};
use crate::predict::{predict_labels, PredictMode, PredictiveDistribution};

/// Minimum predictive probability granted to point-estimate baselines, so
/// one unseen outcome cannot drive the log-likelihood metric to -inf.
pub const PROB_FLOOR: f64 = 1e-10;

/// Specification of one simulated dataset.
///
/// `sigma_*` fields are variances. Defaults follow the generator's
/// convention: `sigma_low = 0.001`, `sigma_int = 0.25`, with `sigma_high`
/// varied to control predictability.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimSpec {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sigma_high: f64,
    pub sigma_low: f64,
    pub sigma_int: f64,
    pub seed: u64,
}

impl SimSpec {
    pub fn new(n: usize, k: usize, m: usize, sigma_high: f64, seed: u64) -> Self {
        Self {
            n,
            k,
            m,
            sigma_high,
            sigma_low: 0.001,
            sigma_int: 0.25,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CbError::InvalidSpec("need at least one sample".into()));
        }
        if self.k < 2 {
            return Err(CbError::InvalidSpec(format!("need K >= 2, got {}", self.k)));
        }
        if self.m < 1 {
            return Err(CbError::InvalidSpec("need at least one covariate".into()));
        }
        if self.m < self.k {
            return Err(CbError::InvalidSpec(format!(
                "need M >= K so every category gets a covariate group (M={}, K={})",
                self.m, self.k
            )));
        }
        if !(self.sigma_high > self.sigma_low) || self.sigma_low <= 0.0 {
            return Err(CbError::InvalidSpec(format!(
                "need sigma_high > sigma_low > 0, got ({}, {})",
                self.sigma_high, self.sigma_low
            )));
        }
        if self.sigma_int <= 0.0 {
            return Err(CbError::InvalidSpec(format!(
                "need sigma_int > 0, got {}",
                self.sigma_int
            )));
        }
        Ok(())
    }

    /// Covariate group size: each category owns `floor(M/K)` covariates.
    pub fn group_size(&self) -> usize {
        self.m / self.k
    }

    /// Sampling variance of weight entry `(m_index, k_index)`, both
    /// 1-based with `m_index = 0` denoting the intercept row.
    pub fn variance_of(&self, m_index: usize, k_index: usize) -> f64 {
        if m_index == 0 {
            self.sigma_int
        } else if k_index == m_index.div_ceil(self.group_size()) {
            self.sigma_high
        } else {
            self.sigma_low
        }
    }
}

/// A simulated dataset with its generating weights and probabilities.
///
/// The dataset's design matrix carries the intercept column of ones in
/// front, matching the `(M+1) x K` weight matrix.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub dataset: Dataset,
    pub b_true: Array2<f64>,
    pub probs_true: Array2<f64>,
}

fn softmax_rows(eta: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = eta.to_owned();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw covariates, block-variance weights, and softmax labels.
///
/// Fully reproducible from the seed: covariates, weights, and label draws
/// each use their own fixed RNG stream.
pub fn simulate(spec: &SimSpec) -> Result<SimOutput> {
    spec.validate()?;
    let (n, k, m) = (spec.n, spec.k, spec.m);

    let mut x_rng = stream_rng(spec.seed, 0);
    let x = Array2::from_shape_fn((n, m), |_| StandardNormal.sample(&mut x_rng));

    let mut b_rng = stream_rng(spec.seed, 1);
    let mut b_true = Array2::<f64>::zeros((m + 1, k));
    for m_index in 0..=m {
        for k_index in 1..=k {
            let sd = spec.variance_of(m_index, k_index).sqrt();
            let z: f64 = StandardNormal.sample(&mut b_rng);
            b_true[[m_index, k_index - 1]] = sd * z;
        }
    }

    let mut x_dot = Array2::<f64>::ones((n, m + 1));
    x_dot.slice_mut(ndarray::s![.., 1..]).assign(&x);
    let probs_true = softmax_rows(x_dot.dot(&b_true).view());

    let mut y_rng = stream_rng(spec.seed, 2);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let u: f64 = y_rng.random();
        let mut acc = 0.0;
        let mut label = k;
        for cat in 0..k {
            acc += probs_true[[i, cat]];
            if u < acc {
                label = cat + 1;
                break;
            }
        }
        y.push(label);
    }

    Ok(SimOutput {
        dataset: Dataset::new(x_dot, y, k)?,
        b_true,
        probs_true,
    })
}

/// Average entropy of the per-row category distributions, with
/// `0 ln 0 = 0`.
pub fn mean_conditional_entropy(probs: ArrayView2<'_, f64>) -> f64 {
    let n = probs.nrows() as f64;
    let mut total = 0.0;
    for &p in probs.iter() {
        if p > 0.0 {
            total -= p * p.ln();
        }
    }
    total / n
}

/// Mean log probability the prediction rows assign to the true labels.
pub fn holdout_log_likelihood(pred: &PredictiveDistribution, y_test: &[usize]) -> Result<f64> {
    if pred.n() != y_test.len() {
        return Err(CbError::ShapeMismatch(format!(
            "{} prediction rows vs {} labels",
            pred.n(),
            y_test.len()
        )));
    }
    let k = pred.k();
    let mut total = 0.0;
    for (i, &label) in y_test.iter().enumerate() {
        if label < 1 || label > k {
            return Err(CbError::InvalidLabel { label, k });
        }
        total += pred.probs()[[i, label - 1]].ln();
    }
    Ok(total / y_test.len() as f64)
}

/// Tie-adjusted accuracy: a row scores `1/C` when the truth is among its
/// `C` maximal-probability labels.
pub fn tie_adjusted_accuracy(pred: &PredictiveDistribution, y_test: &[usize]) -> Result<f64> {
    if pred.n() != y_test.len() {
        return Err(CbError::ShapeMismatch(format!(
            "{} prediction rows vs {} labels",
            pred.n(),
            y_test.len()
        )));
    }
    let labels = predict_labels(pred);
    let mut total = 0.0;
    for (lp, &truth) in labels.iter().zip(y_test) {
        if lp.tied.contains(&truth) {
            total += lp.credit;
        }
    }
    Ok(total / y_test.len() as f64)
}

/// KL divergence between two discrete distributions, `0 ln 0 = 0`.
pub fn discrete_kl(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> f64 {
    p.iter()
        .zip(q.iter())
        .map(|(&pi, &qi)| if pi > 0.0 { pi * (pi / qi).ln() } else { 0.0 })
        .sum()
}

/// Clamp each row's entries to at least `floor`, then renormalize.
pub fn floor_and_renormalize(probs: &mut Array2<f64>, floor: f64) {
    for mut row in probs.rows_mut() {
        row.mapv_inplace(|p| p.max(floor));
        let sum = row.sum();
        row.mapv_inplace(|p| p / sum);
    }
}

/// Options for the softmax maximum-likelihood baseline.
#[derive(Debug, Clone, Copy)]
pub struct SoftmaxMleOptions {
    pub max_iters: usize,
    /// Converged when the gradient max-norm falls below this.
    pub grad_tol: f64,
}

impl Default for SoftmaxMleOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-6,
        }
    }
}

/// Result of the softmax maximum-likelihood baseline.
#[derive(Debug, Clone)]
pub struct SoftmaxFit {
    pub weights: Array2<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
}

fn softmax_log_likelihood(b: ArrayView2<'_, f64>, x: ArrayView2<'_, f64>, y: &[usize]) -> f64 {
    let eta = x.dot(&b);
    let mut total = 0.0;
    for (i, &label) in y.iter().enumerate() {
        let row = eta.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        total += row[label - 1] - lse;
    }
    total
}

/// Softmax probability rows for a fixed weight matrix.
pub fn softmax_probs(b: ArrayView2<'_, f64>, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if b.nrows() != x.ncols() {
        return Err(CbError::ShapeMismatch(format!(
            "weights have {} rows but design has {} columns",
            b.nrows(),
            x.ncols()
        )));
    }
    Ok(softmax_rows(x.dot(&b).view()))
}

/// Plug-in softmax predictive with the baseline probability floor.
pub fn softmax_predictive(
    b: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
) -> Result<PredictiveDistribution> {
    let mut probs = softmax_probs(b, x)?;
    floor_and_renormalize(&mut probs, PROB_FLOOR);
    PredictiveDistribution::from_probs(probs, PredictMode::PlugInMean)
}

/// Maximize the softmax log likelihood by gradient ascent with a
/// backtracking line search, starting from the zero matrix.
///
/// The objective is concave; non-convergence within the iteration cap
/// (e.g. on separable data, where the optimum is at infinity) is reported
/// through the `converged` flag with the partial result returned.
pub fn softmax_mle(data: &Dataset, opts: &SoftmaxMleOptions) -> Result<SoftmaxFit> {
    let x = data.x();
    let y = data.labels();
    let y_onehot = one_hot(y, data.k())?;
    let mut b = Array2::<f64>::zeros((data.m(), data.k()));
    let mut ll = softmax_log_likelihood(b.view(), x, y);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iters {
        iterations += 1;
        let probs = softmax_rows(x.dot(&b).view());
        let grad = x.t().dot(&(&y_onehot.matrix() - &probs));
        let gmax = grad.iter().fold(0.0f64, |a, &g| a.max(g.abs()));
        if gmax < opts.grad_tol {
            converged = true;
            break;
        }
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate = &b + &(alpha * &grad);
            let cand_ll = softmax_log_likelihood(candidate.view(), x, y);
            if cand_ll >= ll + 1e-4 * alpha * gnorm2 {
                b = candidate;
                ll = cand_ll;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // stalled at float resolution without meeting the gradient
            // rule; report non-convergence with the partial result
            break;
        }
    }

    Ok(SoftmaxFit {
        weights: b,
        converged,
        iterations,
        log_likelihood: ll,
    })
}

/// Constant-row predictor from training-set category frequencies.
#[derive(Debug, Clone)]
pub struct BaseratePredictor {
    probs: Array1<f64>,
}

impl BaseratePredictor {
    /// Estimate floored, renormalized frequencies from training labels.
    pub fn fit(y_train: &[usize], k: usize) -> Result<Self> {
        if y_train.is_empty() {
            return Err(CbError::InvalidData("empty training labels".into()));
        }
        let mut counts = vec![0usize; k];
        for &label in y_train {
            if label < 1 || label > k {
                return Err(CbError::InvalidLabel { label, k });
            }
            counts[label - 1] += 1;
        }
        let n = y_train.len() as f64;
        let mut probs = Array2::from_shape_fn((1, k), |(_, c)| counts[c] as f64 / n);
        floor_and_renormalize(&mut probs, PROB_FLOOR);
        Ok(Self {
            probs: probs.row(0).to_owned(),
        })
    }

    pub fn probs(&self) -> ArrayView1<'_, f64> {
        self.probs.view()
    }

    /// Predictive distribution repeating the frequency row.
    pub fn predict(&self, n_star: usize) -> PredictiveDistribution {
        let mut probs = Array2::<f64>::zeros((n_star, self.probs.len()));
        for mut row in probs.rows_mut() {
            row.assign(&self.probs);
        }
        PredictiveDistribution::from_probs(probs, PredictMode::PlugInMean)
            .expect("frequencies are a probability vector")
    }
}

/// Featurize a timestamped event stream for next-event prediction.
///
/// Each event becomes one row: every one of its up-to-`window` preceding
/// events contributes `exp(-dt/tau)` to the column of that event's
/// process, contributions to the same column summing. Events with fewer
/// than `window` predecessors use whatever history exists, so the first
/// row is all zeros. Labels are the events' own process ids; the category
/// count is the largest process id observed.
pub fn featurize_sequence(
    events: &[(usize, f64)],
    window: usize,
    tau: f64,
) -> Result<Dataset> {
    let k = events.iter().map(|&(pid, _)| pid).max().unwrap_or(0);
    featurize_sequence_with_k(events, window, tau, k)
}

/// As [`featurize_sequence`], with the category count fixed externally
/// (e.g. from a process vocabulary built over a larger file).
pub fn featurize_sequence_with_k(
    events: &[(usize, f64)],
    window: usize,
    tau: f64,
    k: usize,
) -> Result<Dataset> {
    if events.is_empty() {
        return Err(CbError::InvalidSpec("empty event stream".into()));
    }
    if window < 1 {
        return Err(CbError::InvalidSpec("window must be at least 1".into()));
    }
    if !(tau > 0.0) {
        return Err(CbError::InvalidSpec(format!("tau must be positive, got {tau}")));
    }
    for (idx, &(pid, t)) in events.iter().enumerate() {
        if pid < 1 || pid > k {
            return Err(CbError::InvalidSpec(format!(
                "process ids must lie in 1..={k}, got {pid} at event {idx}"
            )));
        }
        if idx > 0 && t < events[idx - 1].1 {
            return Err(CbError::InvalidSpec(format!(
                "timestamps must be nondecreasing, event {idx} goes back in time"
            )));
        }
    }
    let n = events.len();
    let mut x = Array2::<f64>::zeros((n, k));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let (pid, t) = events[i];
        y.push(pid);
        for j in i.saturating_sub(window)..i {
            let (prev_pid, prev_t) = events[j];
            x[[i, prev_pid - 1]] += (-(t - prev_t) / tau).exp();
        }
    }
    Dataset::new(x, y, k)
}

/// Seeded uniform split into train and test parts.
pub fn split_random(data: &Dataset, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = data.n();
    let n_train = split_sizes(n, train_frac)?;
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(seed, 3);
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
    let (train_idx, test_idx) = indices.split_at(n_train);
    Ok((subset(data, train_idx)?, subset(data, test_idx)?))
}

/// Chronological split: the first fraction of rows trains, the rest test.
pub fn split_chronological(data: &Dataset, train_frac: f64) -> Result<(Dataset, Dataset)> {
    let n = data.n();
    let n_train = split_sizes(n, train_frac)?;
    let indices: Vec<usize> = (0..n).collect();
    let (train_idx, test_idx) = indices.split_at(n_train);
    Ok((subset(data, train_idx)?, subset(data, test_idx)?))
}

fn split_sizes(n: usize, train_frac: f64) -> Result<usize> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(CbError::InvalidSpec(format!(
            "train fraction must lie in (0, 1), got {train_frac}"
        )));
    }
    if n < 2 {
        return Err(CbError::InvalidData("cannot split fewer than two rows".into()));
    }
    let n_train = ((n as f64) * train_frac).floor() as usize;
    Ok(n_train.clamp(1, n - 1))
}

fn subset(data: &Dataset, indices: &[usize]) -> Result<Dataset> {
    let mut x = Array2::<f64>::zeros((indices.len(), data.m()));
    let mut y = Vec::with_capacity(indices.len());
    for (row, &i) in indices.iter().enumerate() {
        x.row_mut(row).assign(&data.x().row(i));
        y.push(data.labels()[i]);
    }
    Dataset::new(x, y, data.k())
}
