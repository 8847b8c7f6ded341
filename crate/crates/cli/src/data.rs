//! Dataset loading shared by the subcommands. Input files are CSV
//! (feature_0..feature_{d-1},target) or IDX images, detected by the IDX
//! magic bytes; IDX labels come from a companion file.

use std::io::Read as _;
use std::path::Path;

use simplex_core::evaluation::{load_idx, load_idx_labels, read_dataset_csv};

use crate::error::{CliError, CliResult};

pub type Dataset = Vec<(Vec<f64>, Vec<f64>)>;

fn is_idx(path: &Path) -> CliResult<bool> {
    let mut file = std::fs::File::open(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut magic = [0u8; 4];
    if file.read_exact(&mut magic).is_err() {
        return Ok(false);
    }
    Ok(magic[0] == 0 && magic[1] == 0 && magic[2] == 8)
}

/// Loads a dataset; `labels_path` supplies IDX labels when the features
/// are an IDX image file. CSV targets are class indices when `n_classes`
/// is set, scalar regression targets otherwise.
pub fn load_dataset(
    path: &Path,
    labels_path: Option<&Path>,
    n_classes: Option<usize>,
) -> CliResult<Dataset> {
    if is_idx(path)? {
        let images = load_idx(path)?;
        let labels = match (labels_path, n_classes) {
            (Some(lp), Some(k)) => {
                let raw = load_idx_labels(lp)?;
                if raw.len() != images.len() {
                    return Err(CliError::Data(format!(
                        "label count {} does not match image count {}",
                        raw.len(),
                        images.len()
                    )));
                }
                raw.iter()
                    .map(|&c| {
                        let mut one_hot = vec![0.0; k];
                        if (c as usize) < k {
                            one_hot[c as usize] = 1.0;
                        }
                        one_hot
                    })
                    .collect()
            }
            _ => vec![vec![0.0]; images.len()],
        };
        return Ok(images.into_iter().zip(labels).collect());
    }
    Ok(read_dataset_csv(path, n_classes)?)
}

pub fn features(data: &Dataset) -> Vec<Vec<f64>> {
    data.iter().map(|(x, _)| x.clone()).collect()
}

pub fn targets(data: &Dataset) -> Vec<Vec<f64>> {
    data.iter().map(|(_, t)| t.clone()).collect()
}

/// Formats one float with 17 significant digits for CSV output.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
