//! Scalar distribution primitives.
//!
//! Standard-normal pdf/cdf, stable Mills-ratio perturbations, moments and
//! entropy of unit-variance normals truncated to a half-line, the
//! Polya-Gamma mean, and Gaussian entropy/KL. These are the numerical
//! kernels the variational updates are assembled from, so everything here
//! has to stay finite and accurate for linear predictors as large as the
//! optimizer can drive them (|mu| up to ~40 on separable data).

use ndarray::{ArrayView1, ArrayView2};
use statrs::function::erf;

use crate::error::{CbError, Result};
use crate::linalg::Cholesky;

pub const LN_2PI: f64 = 1.8378770664093453;
pub const SQRT_2PI: f64 = 2.5066282746310002;
/// phi(0) = 1/sqrt(2*pi)
pub const STD_NORMAL_PDF_AT_ZERO: f64 = 0.3989422804014327;

/// Boundary between the central series and the tail continued fraction.
/// Inside it the series has no cancellation worse than ~5e-13 relative;
/// outside it the continued fraction is machine-accurate.
const CENTRAL_RANGE: f64 = 3.5;

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// `sum_{n>=0} t^(2n+1) / (2n+1)!!`, so that `Phi(t) = 1/2 + phi(t) * S(t)`
/// for t >= 0. All terms are positive, so no cancellation.
fn central_cdf_series(t: f64) -> f64 {
    debug_assert!((0.0..=CENTRAL_RANGE).contains(&t));
    let t2 = t * t;
    let mut term = t;
    let mut total = t;
    let mut odd = 1.0;
    while term > total * 1e-17 {
        odd += 2.0;
        term *= t2 / odd;
        total += term;
    }
    total
}

/// Hazard rate phi(t)/Phi(-t) via the classical Mills-ratio continued
/// fraction `t + 1/(t + 2/(t + 3/(t + ...)))`, evaluated bottom-up.
/// Machine-accurate for `t >= CENTRAL_RANGE` and immune to the tail
/// underflow of both phi and Phi.
fn tail_hazard(t: f64) -> f64 {
    debug_assert!(t >= CENTRAL_RANGE);
    let mut v = t;
    for n in (1..=128u32).rev() {
        v = t + f64::from(n) / v;
    }
    v
}

/// Standard normal cdf: central series inside `CENTRAL_RANGE`, Mills
/// continued fraction in the tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    let t = x.abs();
    if t <= CENTRAL_RANGE {
        let s = std_normal_pdf(t) * central_cdf_series(t);
        if x >= 0.0 {
            0.5 + s
        } else {
            0.5 - s
        }
    } else if x > 0.0 {
        1.0 - std_normal_pdf(t) / tail_hazard(t)
    } else {
        std_normal_pdf(t) / tail_hazard(t)
    }
}

/// Pdf and cdf of the standard normal at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdNormal {
    pub pdf: f64,
    pub cdf: f64,
}

/// Checked evaluation of the standard normal pdf and cdf.
pub fn std_normal(x: f64) -> Result<StdNormal> {
    if !x.is_finite() {
        return Err(CbError::InvalidData(format!("non-finite input {x}")));
    }
    Ok(StdNormal {
        pdf: std_normal_pdf(x),
        cdf: std_normal_cdf(x),
    })
}

/// Mills-ratio perturbation phi(mu)/Phi(mu); stays finite for mu down to
/// at least -40, where both numerator and denominator underflow but their
/// ratio is the hazard given directly by the continued fraction.
#[inline]
pub fn mills_delta_plus(mu: f64) -> f64 {
    if mu >= -CENTRAL_RANGE {
        std_normal_pdf(mu) / std_normal_cdf(mu)
    } else {
        tail_hazard(-mu)
    }
}

/// log Phi(x), stable for very negative x.
pub fn log_std_normal_cdf(x: f64) -> f64 {
    if x >= -CENTRAL_RANGE {
        std_normal_cdf(x).ln()
    } else {
        -0.5 * LN_2PI - 0.5 * x * x - tail_hazard(-x).ln()
    }
}

/// Inverse standard normal cdf, polished with one Newton step.
pub fn inverse_std_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let x = std::f64::consts::SQRT_2 * erf::erf_inv(2.0 * p - 1.0);
    x - (std_normal_cdf(x) - p) / std_normal_pdf(x)
}

/// Standard logistic cdf, evaluated without overflow on either tail.
#[inline]
pub fn std_logistic_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(x)).
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Which half-line a unit-variance normal is truncated to.
///
/// `Plus` corresponds to an outcome bit of 1, `Minus` to a bit of 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncSide {
    Plus,
    Minus,
}

impl TruncSide {
    /// Side selected by a binary outcome.
    #[inline]
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            TruncSide::Plus
        } else {
            TruncSide::Minus
        }
    }
}

/// Mean, variance, and differential entropy of a truncated unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncMoments {
    pub mean: f64,
    pub variance: f64,
    pub entropy: f64,
}

/// Signed perturbation of the parent mean: `E[T] = mu + delta`.
#[inline]
pub fn trunc_mean_shift(mu: f64, side: TruncSide) -> f64 {
    match side {
        TruncSide::Plus => mills_delta_plus(mu),
        TruncSide::Minus => -mills_delta_plus(-mu),
    }
}

/// Moments of a unit-variance normal with location `mu` truncated to the
/// positive (`Plus`) or negative (`Minus`) reals.
pub fn truncnorm_unit(mu: f64, side: TruncSide) -> Result<TruncMoments> {
    if !mu.is_finite() {
        return Err(CbError::InvalidData(format!("non-finite location {mu}")));
    }
    // The Minus side is the mirror image of the Plus side at -mu.
    let m = match side {
        TruncSide::Plus => mu,
        TruncSide::Minus => -mu,
    };
    let delta = mills_delta_plus(m);
    let plus_mean = m + delta;
    let variance = 1.0 - m * delta - delta * delta;
    let entropy = 0.5 * (1.0 + LN_2PI) + log_std_normal_cdf(m) - 0.5 * m * delta;
    let mean = match side {
        TruncSide::Plus => plus_mean,
        TruncSide::Minus => -plus_mean,
    };
    Ok(TruncMoments {
        mean,
        variance,
        entropy,
    })
}

/// Mean of a PG(b, c) random variable: `(b/2c) tanh(c/2)`, with the even
/// series `b (1/4 - c^2/48)` near c = 0.
#[inline]
pub fn pg_mean(b: f64, c: f64) -> f64 {
    debug_assert!(b > 0.0);
    if c.abs() < 1e-4 {
        b * (0.25 - c * c / 48.0)
    } else {
        b / (2.0 * c) * (0.5 * c).tanh()
    }
}

/// Differential entropy of N(mu, Sigma): `0.5 ln((2 pi e)^d |Sigma|)`.
pub fn gaussian_entropy(sigma: ArrayView2<'_, f64>) -> Result<f64> {
    let chol = Cholesky::factor(sigma)?;
    let d = chol.dim() as f64;
    Ok(0.5 * d * (1.0 + LN_2PI) + 0.5 * chol.log_det())
}

/// KL( N(mu_q, Sigma_q) || N(mu_p, Sigma_p) ).
pub fn gaussian_kl(
    mu_q: ArrayView1<'_, f64>,
    sigma_q: ArrayView2<'_, f64>,
    mu_p: ArrayView1<'_, f64>,
    sigma_p: ArrayView2<'_, f64>,
) -> Result<f64> {
    let d = mu_q.len();
    if mu_p.len() != d || sigma_q.nrows() != d || sigma_p.nrows() != d {
        return Err(CbError::ShapeMismatch(format!(
            "kl dims disagree: {} vs {} vs {}x{} vs {}x{}",
            d,
            mu_p.len(),
            sigma_q.nrows(),
            sigma_q.ncols(),
            sigma_p.nrows(),
            sigma_p.ncols()
        )));
    }
    let chol_q = Cholesky::factor(sigma_q)?;
    let chol_p = Cholesky::factor(sigma_p)?;
    let diff = &mu_q.to_owned() - &mu_p;
    let maha = diff.dot(&chol_p.solve_vec(diff.view()));
    let tr = chol_p.solve_mat(sigma_q).diag().sum();
    Ok(0.5 * (chol_p.log_det() - chol_q.log_det() - d as f64 + maha + tr))
}
