//! File formats: numeric CSV, label columns, posterior documents,
//! prediction tables, metrics, and simulation truth.
//!
//! Design matrices are headerless comma-separated floats; labels are a
//! single 1-based integer column. Structured documents are versioned
//! JSON that round-trips byte-identically. All writes go through a
//! temp-file-and-rename so readers never observe partial files.

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use cb_core::model::Link;
use cb_core::predict::{BmaWeights, PosteriorCov, PosteriorGaussian};
use cb_core::simgen::SimSpec;

use crate::config::RunConfig;
use crate::CliError;

pub const POSTERIOR_VERSION: u32 = 1;

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(|e| CliError::Data(format!("cannot create temp file near {path:?}: {e}")))?;
    tmp.write_all(bytes)
        .map_err(|e| CliError::Data(format!("cannot write {path:?}: {e}")))?;
    tmp.persist(path)
        .map_err(|e| CliError::Data(format!("cannot finalize {path:?}: {e}")))?;
    Ok(())
}

pub fn read_matrix_csv(path: &str) -> Result<Array2<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {path}: {e}")))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| {
            CliError::Data(format!("{path}:{}: bad number: {e}", lineno + 1))
        })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CliError::Data(format!(
                    "{path}:{}: expected {} columns, got {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{path}: no rows")));
    }
    let ncols = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let nrows = flat.len() / ncols;
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| CliError::Data(format!("{path}: {e}")))
}

pub fn write_matrix_csv(path: &Path, matrix: &Array2<f64>) -> Result<(), CliError> {
    let mut out = String::new();
    for row in matrix.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

pub fn read_labels_csv(path: &str) -> Result<Vec<usize>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {path}: {e}")))?;
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let label: usize = line
            .parse()
            .map_err(|e| CliError::Data(format!("{path}:{}: bad label: {e}", lineno + 1)))?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(CliError::Data(format!("{path}: no labels")));
    }
    Ok(labels)
}

pub fn write_labels_csv(path: &Path, labels: &[usize]) -> Result<(), CliError> {
    let mut out = String::new();
    for label in labels {
        out.push_str(&label.to_string());
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Per-column z-transform statistics stored with a posterior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZScoreStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ZScoreStats {
    pub fn fit(x: &Array2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mu = col.sum() / n;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            mean.push(mu);
            // constant columns pass through unscaled
            std.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Self { mean, std }
    }

    pub fn apply(&self, x: &mut Array2<f64>) -> Result<(), CliError> {
        if x.ncols() != self.mean.len() {
            return Err(CliError::Data(format!(
                "z-score stats cover {} columns, design has {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        for (j, mut col) in x.columns_mut().into_iter().enumerate() {
            let (mu, sd) = (self.mean[j], self.std[j]);
            col.mapv_inplace(|v| (v - mu) / sd);
        }
        Ok(())
    }
}

/// Covariance block of a posterior document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceDoc {
    Shared(Vec<Vec<f64>>),
    PerCategory(Vec<Vec<Vec<f64>>>),
}

/// Versioned posterior document tying the fitted factors to the data
/// dimensions, preprocessing, objective trace, and the configuration
/// that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorFile {
    pub version: u32,
    pub link: Link,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub mu_tilde: Vec<Vec<f64>>,
    pub covariance: CovarianceDoc,
    pub elbo_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub intercept: bool,
    pub zscore: Option<ZScoreStats>,
    pub train_x_path: String,
    pub train_y_path: String,
    pub config: RunConfig,
}

fn matrix_to_doc(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn doc_to_matrix(doc: &[Vec<f64>], what: &str) -> Result<Array2<f64>, CliError> {
    if doc.is_empty() {
        return Err(CliError::Data(format!("{what}: empty matrix")));
    }
    let ncols = doc[0].len();
    if doc.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Data(format!("{what}: ragged rows")));
    }
    let flat: Vec<f64> = doc.iter().flatten().copied().collect();
    Array2::from_shape_vec((doc.len(), ncols), flat)
        .map_err(|e| CliError::Data(format!("{what}: {e}")))
}

impl PosteriorFile {
    #[allow(clippy::too_many_arguments)]
    pub fn from_posterior(
        q: &PosteriorGaussian,
        link: Link,
        n: usize,
        elbo_trace: Vec<f64>,
        iterations: usize,
        converged: bool,
        intercept: bool,
        zscore: Option<ZScoreStats>,
        train_x_path: &str,
        train_y_path: &str,
        config: &RunConfig,
    ) -> Self {
        let covariance = match q.cov() {
            PosteriorCov::Shared(s) => CovarianceDoc::Shared(matrix_to_doc(s)),
            PosteriorCov::PerCategory(v) => {
                CovarianceDoc::PerCategory(v.iter().map(matrix_to_doc).collect())
            }
        };
        Self {
            version: POSTERIOR_VERSION,
            link,
            n,
            m: q.m(),
            k: q.k(),
            mu_tilde: matrix_to_doc(&q.mean().to_owned()),
            covariance,
            elbo_trace,
            iterations,
            converged,
            intercept,
            zscore,
            train_x_path: train_x_path.to_string(),
            train_y_path: train_y_path.to_string(),
            config: config.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Data(format!("cannot serialize posterior: {e}")))?;
        json.push('\n');
        atomic_write(path, json.as_bytes())
    }

    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {path}: {e}")))?;
        let doc: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("bad posterior {path}: {e}")))?;
        if doc.version != POSTERIOR_VERSION {
            return Err(CliError::Data(format!(
                "{path}: unsupported posterior version {} (expected {POSTERIOR_VERSION})",
                doc.version
            )));
        }
        doc.validate(path)?;
        Ok(doc)
    }

    fn validate(&self, path: &str) -> Result<(), CliError> {
        if self.mu_tilde.len() != self.m
            || self.mu_tilde.iter().any(|row| row.len() != self.k)
        {
            return Err(CliError::Data(format!(
                "{path}: mean block does not match declared dimensions {}x{}",
                self.m, self.k
            )));
        }
        let cov_ok = match &self.covariance {
            CovarianceDoc::Shared(s) => {
                s.len() == self.m && s.iter().all(|r| r.len() == self.m)
            }
            CovarianceDoc::PerCategory(v) => {
                v.len() == self.k
                    && v.iter()
                        .all(|s| s.len() == self.m && s.iter().all(|r| r.len() == self.m))
            }
        };
        if !cov_ok {
            return Err(CliError::Data(format!(
                "{path}: covariance block does not match declared dimensions {}x{} ({} categories)",
                self.m, self.m, self.k
            )));
        }
        Ok(())
    }

    pub fn to_posterior(&self) -> Result<PosteriorGaussian, CliError> {
        let mean = doc_to_matrix(&self.mu_tilde, "mu_tilde")?;
        let cov = match &self.covariance {
            CovarianceDoc::Shared(s) => PosteriorCov::Shared(doc_to_matrix(s, "covariance")?),
            CovarianceDoc::PerCategory(v) => PosteriorCov::PerCategory(
                v.iter()
                    .map(|s| doc_to_matrix(s, "covariance"))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        PosteriorGaussian::new(mean, cov).map_err(CliError::from)
    }
}

/// Simulation truth document: generating weights and probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthFile {
    pub version: u32,
    pub spec: SimSpec,
    pub b_true: Vec<Vec<f64>>,
    pub probs: Vec<Vec<f64>>,
}

impl TruthFile {
    pub fn new(spec: SimSpec, b_true: &Array2<f64>, probs: &Array2<f64>) -> Self {
        Self {
            version: 1,
            spec,
            b_true: matrix_to_doc(b_true),
            probs: matrix_to_doc(probs),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Data(format!("cannot serialize truth: {e}")))?;
        json.push('\n');
        atomic_write(path, json.as_bytes())
    }

    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {path}: {e}")))?;
        let doc: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("bad truth file {path}: {e}")))?;
        let probs = doc.probs_matrix()?;
        for (i, row) in probs.rows().into_iter().enumerate() {
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(CliError::Data(format!(
                    "{path}: truth row {i} sums to {sum}, not 1"
                )));
            }
        }
        Ok(doc)
    }

    pub fn probs_matrix(&self) -> Result<Array2<f64>, CliError> {
        doc_to_matrix(&self.probs, "truth probabilities")
    }
}

/// Write a predictions table: probability columns, argmax label, tie
/// credit, with model-average weights echoed in a comment header.
pub fn write_predictions(
    path: &Path,
    probs: &Array2<f64>,
    labels: &[(usize, f64)],
    weights: Option<&BmaWeights>,
) -> Result<(), CliError> {
    let k = probs.ncols();
    let mut out = String::new();
    if let Some(w) = weights {
        out.push_str(&format!("# w_cbm={} w_cbc={}\n", w.w_cbm, w.w_cbc));
    }
    let header: Vec<String> = (1..=k)
        .map(|j| format!("p{j}"))
        .chain(["label".to_string(), "credit".to_string()])
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in probs.rows().into_iter().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        cells.push(labels[i].0.to_string());
        cells.push(format!("{}", labels[i].1));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Parsed predictions table.
pub struct PredictionsTable {
    pub probs: Array2<f64>,
    pub weights: Option<(f64, f64)>,
}

pub fn read_predictions(path: &str) -> Result<PredictionsTable, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {path}: {e}")))?;
    let mut weights = None;
    let mut k = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut w_cbm = None;
            let mut w_cbc = None;
            for token in rest.split_whitespace() {
                if let Some(v) = token.strip_prefix("w_cbm=") {
                    w_cbm = v.parse::<f64>().ok();
                }
                if let Some(v) = token.strip_prefix("w_cbc=") {
                    w_cbc = v.parse::<f64>().ok();
                }
            }
            if let (Some(a), Some(b)) = (w_cbm, w_cbc) {
                weights = Some((a, b));
            }
            continue;
        }
        if line.starts_with('p') {
            // header row: count probability columns
            k = Some(line.split(',').filter(|c| c.starts_with('p')).count());
            continue;
        }
        let k = k.ok_or_else(|| {
            CliError::Data(format!("{path}:{}: data before header", lineno + 1))
        })?;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != k + 2 {
            return Err(CliError::Data(format!(
                "{path}:{}: expected {} cells, got {}",
                lineno + 1,
                k + 2,
                cells.len()
            )));
        }
        let row: Result<Vec<f64>, _> = cells[..k].iter().map(|c| c.parse::<f64>()).collect();
        rows.push(row.map_err(|e| {
            CliError::Data(format!("{path}:{}: bad probability: {e}", lineno + 1))
        })?);
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{path}: no prediction rows")));
    }
    let ncols = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let nrows = flat.len() / ncols;
    Ok(PredictionsTable {
        probs: Array2::from_shape_vec((nrows, ncols), flat)
            .map_err(|e| CliError::Data(format!("{path}: {e}")))?,
        weights,
    })
}

/// Evaluation metrics document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsFile {
    pub version: u32,
    pub n_test: usize,
    pub mean_holdout_log_likelihood: f64,
    pub tie_adjusted_accuracy: f64,
    pub mean_kl_to_truth: Option<f64>,
}

impl MetricsFile {
    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Data(format!("cannot serialize metrics: {e}")))?;
        json.push('\n');
        atomic_write(path, json.as_bytes())
    }
}

/// Read a single-column vector CSV (prior means).
pub fn read_vector_csv(path: &str) -> Result<Array1<f64>, CliError> {
    let m = read_matrix_csv(path)?;
    if m.ncols() != 1 {
        return Err(CliError::Data(format!(
            "{path}: expected one column, got {}",
            m.ncols()
        )));
    }
    Ok(m.column(0).to_owned())
}
