//! Bayesian categorical regression through categorical-from-binary models.
//!
//! Categorical likelihoods built from independent binary regressions admit
//! a surrogate bound: the evidence lower bound of the independent-binary
//! model on one-hot-encoded labels lower-bounds the categorical marginal
//! likelihood. That makes coordinate ascent variational inference with
//! closed-form updates available for categorical data under both probit
//! and logit links, and a single fitted posterior serves every downstream
//! categorical likelihood, so predictions can average over them with
//! Bayesian model weights estimated by Monte Carlo.
//!
//! Crate layout:
//!
//! * [`special`] - scalar distribution kernels (truncated-normal moments,
//!   Polya-Gamma means, Gaussian entropy/KL).
//! * [`model`] - datasets, links, constructions, exact likelihoods.
//! * [`cavi`] - the probit and logit variational engines.
//! * [`predict`] - evidence estimation, model-averaged predictions.
//! * [`simgen`] - simulation generator, metrics, reference baselines, and
//!   the event-sequence featurizer.

pub mod cavi;
pub mod error;
pub mod linalg;
pub mod model;
pub mod predict;
pub mod simgen;
pub mod sparse;
pub mod special;

pub use cavi::logit::{logit_fit, LogitState};
pub use cavi::probit::{probit_fit, ProbitState};
pub use cavi::{FitOptions, FitReport};
pub use error::{CbError, Result};
pub use model::{Construction, Dataset, GaussianPrior, Link, OneHot, Weights};
pub use predict::{BmaWeights, PosteriorGaussian, PredictMode, PredictTarget, PredictiveDistribution};
pub use simgen::{SimOutput, SimSpec};
