pub mod benchmark;
pub mod corrupt;
pub mod detect;
pub mod explain;
pub mod train;

use std::path::Path;

use simplex_core::{Corpus, DecompositionConfig, SplitModel};

use crate::config::RunConfig;
use crate::data::{features, targets, Dataset};
use crate::error::{CliError, CliResult};

/// Seed resolution: the --seed flag wins over the config key; default 0.
pub fn resolve_seed(config: &RunConfig, flag: Option<u64>) -> CliResult<u64> {
    Ok(match flag {
        Some(s) => s,
        None => config.parse_or("seed", 0u64)?,
    })
}

/// Decomposition settings shared by explain/benchmark/detect/corrupt.
pub fn decomposition_config(config: &RunConfig) -> CliResult<DecompositionConfig> {
    let mut cfg = DecompositionConfig {
        steps: config.parse_or("steps", DecompositionConfig::default().steps)?,
        ..DecompositionConfig::default()
    };
    if let Some(k) = config.parse_opt::<usize>("k_active")? {
        cfg.k_active = Some(k);
    }
    Ok(cfg)
}

/// Loads a dataset keyed `key` (with optional `<key>_labels` IDX file)
/// and builds the corpus against the checkpointed model.
pub fn load_corpus(
    config: &RunConfig,
    model: &SplitModel,
    key: &str,
    n_classes: Option<usize>,
) -> CliResult<(Corpus, Dataset)> {
    let path = config.path_req(key)?;
    let labels_key = format!("{key}_labels");
    let labels_path = match config.str_opt(&labels_key) {
        Some(_) => Some(config.path_req(&labels_key)?),
        None => None,
    };
    let dataset = crate::data::load_dataset(&path, labels_path.as_deref(), n_classes)?;
    let labels = n_classes.map(|_| targets(&dataset));
    let corpus = Corpus::from_inputs(model, features(&dataset), labels)?;
    Ok((corpus, dataset))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
