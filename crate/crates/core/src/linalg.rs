//! Dense symmetric-positive-definite linear algebra.
//!
//! Every SPD operation in the crate (posterior covariances, KL terms,
//! entropies, sampling) goes through the single lower-triangular
//! factorization defined here, so determinants, solves, and inverses are
//! numerically consistent with one another.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{CbError, Result};

/// Lower-triangular Cholesky factor of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    /// Factor a symmetric positive definite matrix as `L Lᵀ`.
    ///
    /// Fails with `InvalidCovariance` when a non-positive pivot appears.
    pub fn factor(a: ArrayView2<'_, f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(CbError::ShapeMismatch(format!(
                "expected square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut diag = a[[j, j]];
            for k in 0..j {
                diag -= l[[j, k]] * l[[j, k]];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(CbError::InvalidCovariance(format!(
                    "non-positive pivot {diag:e} at column {j}"
                )));
            }
            let dsqrt = diag.sqrt();
            l[[j, j]] = dsqrt;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / dsqrt;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// The lower-triangular factor `L`.
    pub fn lower(&self) -> ArrayView2<'_, f64> {
        self.lower.view()
    }

    /// Log-determinant of the factored matrix, via the factor diagonal.
    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| self.lower[[i, i]].ln()).sum::<f64>() * 2.0
    }

    /// Solve `A x = b`.
    pub fn solve_vec(&self, b: ArrayView1<'_, f64>) -> Array1<f64> {
        let mut x = b.to_owned();
        self.solve_in_place(x.as_slice_mut().expect("contiguous"));
        x
    }

    /// Solve `A X = B` column by column.
    pub fn solve_mat(&self, b: ArrayView2<'_, f64>) -> Array2<f64> {
        let n = self.dim();
        let mut out = Array2::<f64>::zeros((n, b.ncols()));
        for (j, col) in b.columns().into_iter().enumerate() {
            out.column_mut(j).assign(&self.solve_vec(col));
        }
        out
    }

    /// Explicit inverse `A⁻¹`.
    pub fn inverse(&self) -> Array2<f64> {
        self.solve_mat(Array2::eye(self.dim()).view())
    }

    /// `L v`, used to turn standard normal draws into correlated draws.
    pub fn lower_times(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        let n = self.dim();
        let mut out = Array1::<f64>::zeros(n);
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..=i {
                s += self.lower[[i, j]] * v[j];
            }
            out[i] = s;
        }
        out
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        // forward: L y = b
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lower[[i, j]] * x[j];
            }
            x[i] = s / self.lower[[i, i]];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lower[[j, i]] * x[j];
            }
            x[i] = s / self.lower[[i, i]];
        }
    }
}

/// `xᵀ A x` for symmetric `A`.
pub fn quad_form(a: ArrayView2<'_, f64>, x: ArrayView1<'_, f64>) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a[[i, j]] * x[j];
        }
        total += x[i] * row;
    }
    total
}

/// Trace of `A B`.
pub fn trace_prod(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    let n = a.nrows();
    let mut t = 0.0;
    for i in 0..n {
        for j in 0..n {
            t += a[[i, j]] * b[[j, i]];
        }
    }
    t
}

/// Pairwise (tree) summation.
///
/// Deterministic for a fixed element order regardless of how the elements
/// were produced, which keeps reductions bit-stable across worker counts.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn factor_solve_roundtrip() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let chol = Cholesky::factor(a.view()).unwrap();
        let b = array![1.0, -2.0, 0.5];
        let x = chol.solve_vec(b.view());
        let back = a.dot(&x);
        for i in 0..3 {
            assert!((back[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn log_det_matches_direct() {
        let a = array![[2.0, 0.3], [0.3, 1.5]];
        let chol = Cholesky::factor(a.view()).unwrap();
        let det: f64 = 2.0 * 1.5 - 0.3 * 0.3;
        assert!((chol.log_det() - det.ln()).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_spd() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(matches!(
            Cholesky::factor(a.view()),
            Err(CbError::InvalidCovariance(_))
        ));
    }

    #[test]
    fn inverse_matches_identity() {
        let a = array![[3.0, 1.0], [1.0, 2.0]];
        let inv = Cholesky::factor(a.view()).unwrap().inverse();
        let prod = a.dot(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[[i, j]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let vals: Vec<f64> = (0..17).map(|i| (i as f64) * 0.37 - 2.0).collect();
        let naive: f64 = vals.iter().sum();
        assert!((pairwise_sum(&vals) - naive).abs() < 1e-12);
    }
}
