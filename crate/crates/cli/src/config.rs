//! The experiment config file and how command-line flags override it.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use ordreg_core::{SyntheticConfig, TrainConfig};

/// A JSON experiment description. Every field is optional; flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset CSV.
    pub data: Option<PathBuf>,
    /// Generate the dataset instead of reading one.
    pub synthetic: Option<SyntheticConfig>,
    pub num_classes: Option<usize>,
    pub methods: Option<Vec<String>>,
    #[serde(default)]
    pub train: TrainConfig,
    pub folds: Option<usize>,
    pub split_seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| crate::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| crate::input(format!("{}: {e}", path.display())))
}

/// Replace every seed with `seed + i`, keeping the ensemble size.
pub fn override_seeds(train: &mut TrainConfig, seed: u64) {
    for (i, s) in train.seeds.iter_mut().enumerate() {
        *s = seed.wrapping_add(i as u64);
    }
}
