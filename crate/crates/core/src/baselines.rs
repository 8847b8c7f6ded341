//! Comparison methods: KNN mixtures in latent space and the
//! representer-theorem output approximation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SplitModel;
use crate::numerics::{argsort_asc, inner, l2_norm, softmax};
use crate::simplex::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnMethod {
    KnnUniform,
    KnnDistance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineWeights {
    pub weights: Vec<f64>,
    pub method: KnnMethod,
}

fn nearest_indices(h: &[f64], corpus: &Corpus, k: usize) -> Result<Vec<usize>> {
    let c = corpus.len();
    if k == 0 || k > c {
        return Err(Error::InvalidArgument(format!(
            "K = {k} out of range 1..={c}"
        )));
    }
    if h.len() != corpus.d_h() {
        return Err(Error::DimensionMismatch {
            context: "knn",
            expected: corpus.d_h(),
            got: h.len(),
        });
    }
    let dists: Vec<f64> = corpus
        .latents()
        .iter()
        .map(|hc| {
            let diff: Vec<f64> = h.iter().zip(hc).map(|(a, b)| a - b).collect();
            l2_norm(&diff)
        })
        .collect();
    Ok(argsort_asc(&dists)[..k].to_vec())
}

/// Weight 1/K on each of the K nearest corpus latents.
pub fn knn_uniform(h: &[f64], corpus: &Corpus, k: usize) -> Result<BaselineWeights> {
    let nearest = nearest_indices(h, corpus, k)?;
    let mut weights = vec![0.0; corpus.len()];
    for idx in nearest {
        weights[idx] = 1.0 / k as f64;
    }
    Ok(BaselineWeights {
        weights,
        method: KnnMethod::KnnUniform,
    })
}

/// Weights inversely proportional to the distance over the K nearest,
/// normalized to sum 1. An exact match (distance 0) takes all the weight.
pub fn knn_distance(h: &[f64], corpus: &Corpus, k: usize) -> Result<BaselineWeights> {
    let nearest = nearest_indices(h, corpus, k)?;
    let mut weights = vec![0.0; corpus.len()];
    let dists: Vec<f64> = nearest
        .iter()
        .map(|&idx| {
            let diff: Vec<f64> = h
                .iter()
                .zip(&corpus.latents()[idx])
                .map(|(a, b)| a - b)
                .collect();
            l2_norm(&diff)
        })
        .collect();
    if let Some(pos) = dists.iter().position(|&d| d == 0.0) {
        weights[nearest[pos]] = 1.0;
        return Ok(BaselineWeights {
            weights,
            method: KnnMethod::KnnDistance,
        });
    }
    let inv: Vec<f64> = dists.iter().map(|d| 1.0 / d).collect();
    let total: f64 = inv.iter().sum();
    for (idx, w) in nearest.iter().zip(&inv) {
        weights[*idx] = w / total;
    }
    Ok(BaselineWeights {
        weights,
        method: KnnMethod::KnnDistance,
    })
}

/// Representer-theorem output approximation restricted to the corpus:
/// y_hat = (1 / (2 lambda C)) Σ_c [z_c - f(x_c)] <h_c, g(x)>,
/// with f(x_c) the post-softmax probability outputs. Uses the whole
/// corpus; the method has no K-selection.
pub fn representer_output(
    model: &SplitModel,
    corpus: &Corpus,
    x: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    if lambda <= 0.0 {
        return Err(Error::InvalidArgument("lambda must be > 0".into()));
    }
    let labels = corpus.labels().ok_or(Error::MissingLabels)?;
    let predictions = corpus
        .predictions()
        .ok_or_else(|| Error::InvalidArgument("corpus has no cached predictions".into()))?;
    let h = model.forward_latent(x)?;
    let d_y = model.d_y();
    let mut out = vec![0.0; d_y];
    for ((z, logits), h_c) in labels.iter().zip(predictions).zip(corpus.latents()) {
        if z.len() != d_y {
            return Err(Error::DimensionMismatch {
                context: "representer labels",
                expected: d_y,
                got: z.len(),
            });
        }
        let probs = softmax(logits);
        let kernel = inner(h_c, &h)?;
        for k in 0..d_y {
            out[k] += (z[k] - probs[k]) * kernel;
        }
    }
    let scale = 1.0 / (2.0 * lambda * corpus.len() as f64);
    for v in &mut out {
        *v *= scale;
    }
    Ok(out)
}
