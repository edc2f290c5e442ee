//! Shared dataset builders for the benchmark targets.

use ndarray::Array2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use cb_core::model::Dataset;

/// Random dense dataset with uniform labels.
pub fn random_dataset(n: usize, m: usize, k: usize, seed: u64) -> Dataset {
    let mut rng = StdRng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, m), |_| rng.sample::<f64, _>(StandardNormal));
    let y = (0..n).map(|_| 1 + rng.random_range(0..k)).collect();
    Dataset::new(x, y, k).expect("valid random dataset")
}
