//! Sparse design-matrix support for the probit engine.
//!
//! When the design matrix is sparse, many tilted locations are exactly
//! zero, and the corresponding auxiliary-variable expectations collapse to
//! one of two constants. The decomposition here stores only the general
//! entries and reconstructs the constant ones from the labels, so the full
//! `N x K` expectation matrix never has to be materialized.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{CbError, Result};
use crate::special::STD_NORMAL_PDF_AT_ZERO;

/// Compressed sparse row storage of a design matrix.
#[derive(Debug, Clone)]
pub struct SparseDesign {
    n: usize,
    m: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseDesign {
    /// Build from a dense matrix, dropping exact zeros.
    pub fn from_dense(x: ArrayView2<'_, f64>) -> Self {
        let (n, m) = x.dim();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..m {
                let v = x[[i, j]];
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            m,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Nonzero `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&c, &v)| (c, v))
    }

    /// Dot product of row `i` with a dense vector.
    pub fn row_dot(&self, i: usize, v: ArrayView1<'_, f64>) -> f64 {
        self.row(i).map(|(c, x)| x * v[c]).sum()
    }
}

/// Per-row bookkeeping of which tilted locations are exactly zero.
#[derive(Debug, Clone)]
enum RowZeros {
    /// Every location in the row is zero (e.g. an empty design row).
    All,
    /// No location is zero.
    None,
    /// The listed category columns are zero.
    Some(Vec<u32>),
}

/// Sparse representation of the auxiliary-variable expectation matrix.
///
/// Splits the expectation as `general + 2 phi(0) (hit - miss)`: `general`
/// holds entries whose tilted location is nonzero, while `hit`/`miss` are
/// implicit indicators reconstructed from the labels for zero locations
/// (the label's own column takes `+2 phi(0)`, all others `-2 phi(0)`).
#[derive(Debug, Clone)]
pub struct SparseExpectedZ {
    n: usize,
    k: usize,
    /// Per row: `(category, expectation)` for nonzero tilted locations.
    general: Vec<Vec<(u32, f64)>>,
    zeros: Vec<RowZeros>,
    labels: Vec<usize>,
}

impl SparseExpectedZ {
    pub(crate) fn new(n: usize, k: usize, labels: &[usize]) -> Result<Self> {
        if labels.len() != n {
            return Err(CbError::ShapeMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                n
            )));
        }
        Ok(Self {
            n,
            k,
            general: vec![Vec::new(); n],
            zeros: vec![RowZeros::All; n],
            labels: labels.to_vec(),
        })
    }

    pub(crate) fn set_row(&mut self, i: usize, general: Vec<(u32, f64)>, zero_cats: Vec<u32>) {
        debug_assert_eq!(general.len() + zero_cats.len(), self.k);
        self.zeros[i] = if general.is_empty() {
            RowZeros::All
        } else if zero_cats.is_empty() {
            RowZeros::None
        } else {
            RowZeros::Some(zero_cats)
        };
        self.general[i] = general;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of explicitly stored entries.
    pub fn stored(&self) -> usize {
        self.general.iter().map(Vec::len).sum()
    }

    /// Whether any entry had to fall back to the zero-location constants.
    pub fn has_zero_entries(&self) -> bool {
        self.zeros.iter().any(|z| !matches!(z, RowZeros::None))
    }

    /// Expand to the dense `N x K` expectation matrix.
    pub fn to_dense(&self) -> Array2<f64> {
        let at_zero = 2.0 * STD_NORMAL_PDF_AT_ZERO;
        let mut out = Array2::<f64>::zeros((self.n, self.k));
        for i in 0..self.n {
            let hit = self.labels[i] - 1;
            match &self.zeros[i] {
                RowZeros::All => {
                    for c in 0..self.k {
                        out[[i, c]] = if c == hit { at_zero } else { -at_zero };
                    }
                }
                RowZeros::None => {}
                RowZeros::Some(cats) => {
                    for &c in cats {
                        let c = c as usize;
                        out[[i, c]] = if c == hit { at_zero } else { -at_zero };
                    }
                }
            }
            for &(c, v) in &self.general[i] {
                out[[i, c as usize]] = v;
            }
        }
        out
    }

    /// `Xᵀ E[Z]` assembled without densifying the expectation matrix.
    pub fn design_transpose_product(&self, x: &SparseDesign) -> Result<Array2<f64>> {
        if x.n() != self.n {
            return Err(CbError::ShapeMismatch(format!(
                "design has {} rows, expectations have {}",
                x.n(),
                self.n
            )));
        }
        let at_zero = 2.0 * STD_NORMAL_PDF_AT_ZERO;
        let mut out = Array2::<f64>::zeros((x.m(), self.k));
        for i in 0..self.n {
            let hit = self.labels[i] - 1;
            let mut add = |cat: usize, weight: f64| {
                for (c, v) in x.row(i) {
                    out[[c, cat]] += weight * v;
                }
            };
            match &self.zeros[i] {
                RowZeros::All => {
                    for cat in 0..self.k {
                        add(cat, if cat == hit { at_zero } else { -at_zero });
                    }
                }
                RowZeros::None => {}
                RowZeros::Some(cats) => {
                    for &cat in cats {
                        let cat = cat as usize;
                        add(cat, if cat == hit { at_zero } else { -at_zero });
                    }
                }
            }
            for &(cat, v) in &self.general[i] {
                add(cat as usize, v);
            }
        }
        Ok(out)
    }
}
