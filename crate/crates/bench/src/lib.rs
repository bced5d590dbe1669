//! Shared fixtures for the benchmarks.

use ordreg_core::data::generate_synthetic;
use ordreg_core::{Dataset, SyntheticConfig};

/// A noisy four-class dataset of `n` examples with five features.
pub fn dataset(n: usize, seed: u64) -> Dataset {
    generate_synthetic(&SyntheticConfig {
        n_examples: n,
        n_features: 5,
        num_classes: 4,
        n_raters: 3,
        thresholds: vec![-0.8, 0.0, 0.8],
        feature_noise_sd: 0.1,
        rater_noise_sd: 0.4,
        seed,
    })
    .expect("fixture config is valid")
}
