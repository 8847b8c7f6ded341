//! Corpus decompositions: project a test latent vector onto the convex
//! hull of the corpus latents by optimizing softmax-reparametrized
//! pre-weights with Adam, report the mixture weights and the corpus
//! residual, and run hull diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SplitModel;
use crate::numerics::{
    argsort_asc, ensure_finite, inner, l2_norm, operator_norm, smallest_singular_value, softmax,
    Matrix,
};
use crate::parallel::try_par_map;

/// A reference set of examples with cached latent representations.
#[derive(Debug, Clone)]
pub struct Corpus {
    inputs: Vec<Vec<f64>>,
    latents: Vec<Vec<f64>>,
    labels: Option<Vec<Vec<f64>>>,
    predictions: Option<Vec<Vec<f64>>>,
}

impl Corpus {
    /// Builds a corpus by encoding `inputs` through the model's latent
    /// map. Latents and predictions are always recomputed here, never
    /// trusted from elsewhere.
    pub fn from_inputs(
        model: &SplitModel,
        inputs: Vec<Vec<f64>>,
        labels: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        if let Some(labels) = &labels {
            if labels.len() != inputs.len() {
                return Err(Error::DimensionMismatch {
                    context: "corpus labels",
                    expected: inputs.len(),
                    got: labels.len(),
                });
            }
        }
        for x in &inputs {
            ensure_finite(x, "corpus input")?;
        }
        let latents = try_par_map(&inputs, |x| model.forward_latent(x))?;
        let predictions = try_par_map(&latents, |h| model.forward_head(h))?;
        Ok(Corpus {
            inputs,
            latents,
            labels,
            predictions: Some(predictions),
        })
    }

    /// Builds a corpus directly from latent vectors. Used by tests and
    /// diagnostics that operate purely in latent space.
    pub fn from_latents(latents: Vec<Vec<f64>>) -> Result<Self> {
        if latents.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        let d = latents[0].len();
        for h in &latents {
            if h.len() != d {
                return Err(Error::DimensionMismatch {
                    context: "corpus latents",
                    expected: d,
                    got: h.len(),
                });
            }
            ensure_finite(h, "corpus latent")?;
        }
        Ok(Corpus {
            inputs: Vec::new(),
            latents,
            labels: None,
            predictions: None,
        })
    }

    pub fn len(&self) -> usize {
        self.latents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latents.is_empty()
    }

    pub fn d_h(&self) -> usize {
        self.latents[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn latents(&self) -> &[Vec<f64>] {
        &self.latents
    }

    pub fn labels(&self) -> Option<&[Vec<f64>]> {
        self.labels.as_deref()
    }

    pub fn predictions(&self) -> Option<&[Vec<f64>]> {
        self.predictions.as_deref()
    }
}

/// Settings for the decomposition optimizer. Adam hyperparameters
/// default to lr 1e-3, beta1 0.9, beta2 0.999, eps 1e-8; the top-K
/// sparsity term ramps geometrically from `reg_factor_init` to
/// `reg_factor_final` over the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub k_active: Option<usize>,
    pub reg_factor_init: f64,
    pub reg_factor_final: f64,
    pub activity_threshold: f64,
    /// Stop when the loss improved by less than 1e-9 over 100 steps.
    pub early_stop: bool,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        DecompositionConfig {
            steps: 10_000,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            k_active: None,
            reg_factor_init: 0.1,
            reg_factor_final: 100.0,
            activity_threshold: 1e-3,
            early_stop: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decomposition {
    /// Mixture weights on the probability simplex, one per corpus member.
    pub weights: Vec<f64>,
    /// Corpus residual r(h) = ||h - reconstruction||.
    pub residual: f64,
    pub reconstruction: Vec<f64>,
    /// Number of weights above the activity threshold.
    pub active_count: usize,
}

/// Convex combination Σ_c w_c h_c of the corpus latents.
pub fn reconstruct_latent(corpus: &Corpus, weights: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != corpus.len() {
        return Err(Error::DimensionMismatch {
            context: "reconstruct_latent",
            expected: corpus.len(),
            got: weights.len(),
        });
    }
    let d = corpus.d_h();
    let mut out = vec![0.0; d];
    for (w, h) in weights.iter().zip(corpus.latents()) {
        for i in 0..d {
            out[i] += w * h[i];
        }
    }
    Ok(out)
}

/// Distance from `h` to the reconstruction under `weights`.
pub fn corpus_residual(h: &[f64], corpus: &Corpus, weights: &[f64]) -> Result<f64> {
    let recon = reconstruct_latent(corpus, weights)?;
    if h.len() != recon.len() {
        return Err(Error::DimensionMismatch {
            context: "corpus_residual",
            expected: recon.len(),
            got: h.len(),
        });
    }
    let diff: Vec<f64> = h.iter().zip(&recon).map(|(a, b)| a - b).collect();
    Ok(l2_norm(&diff))
}

/// Projects `h` onto the corpus hull: Adam on zero-initialized
/// pre-weights, weights obtained by softmax, squared-error loss, plus an
/// L1 term on the C-K smallest pre-weights when `k_active` is set.
/// With `k_active`, a second pass refits on the K heaviest members only,
/// so at most K reported weights are nonzero.
pub fn fit_decomposition(
    h: &[f64],
    corpus: &Corpus,
    config: &DecompositionConfig,
) -> Result<Decomposition> {
    let c = corpus.len();
    let d = corpus.d_h();
    if h.len() != d {
        return Err(Error::DimensionMismatch {
            context: "fit_decomposition",
            expected: d,
            got: h.len(),
        });
    }
    if config.steps == 0 {
        return Err(Error::InvalidArgument("steps must be >= 1".into()));
    }
    if let Some(k) = config.k_active {
        if k == 0 || k > c {
            return Err(Error::InvalidArgument(format!(
                "k_active {k} out of range 1..={c}"
            )));
        }
    }
    ensure_finite(h, "test latent")?;

    // Degenerate corpus: single member, nothing to optimize.
    if c == 1 {
        return finalize(h, corpus, vec![1.0], config.activity_threshold);
    }

    let latents = corpus.latents();
    let all: Vec<usize> = (0..c).collect();
    let n_reg = config
        .k_active
        .map(|k| c - k)
        .filter(|&n| n > 0)
        .unwrap_or(0);
    let pre = optimize_preweights(h, latents, &all, config, n_reg)?;

    let weights = match config.k_active {
        Some(k) if k < c => {
            // The L1 ramp concentrates mass on K members but cannot push
            // the remaining softmax weights to zero (a pre-weight held at
            // 0 still gets 1/(Σ e^w̃) of the mass). Restrict the support
            // to the K heaviest members and refit without the penalty so
            // the reported weights are exactly K-sparse.
            let soft = softmax(&pre);
            let mut support = crate::numerics::argsort_desc(&soft);
            support.truncate(k);
            support.sort_unstable();
            let sub_pre = optimize_preweights(h, latents, &support, config, 0)?;
            let sub_w = softmax(&sub_pre);
            let mut full = vec![0.0; c];
            for (&idx, &w) in support.iter().zip(&sub_w) {
                full[idx] = w;
            }
            full
        }
        _ => softmax(&pre),
    };
    finalize(h, corpus, weights, config.activity_threshold)
}

/// Runs the Adam loop over pre-weights for the corpus members listed in
/// `support`; the returned vector is indexed like `support`. When
/// `n_reg > 0` the L1 ramp on the smallest pre-weights is applied.
fn optimize_preweights(
    h: &[f64],
    latents: &[Vec<f64>],
    support: &[usize],
    config: &DecompositionConfig,
    n_reg: usize,
) -> Result<Vec<f64>> {
    let c = support.len();
    let d = h.len();
    let mut pre = vec![0.0; c];
    let mut m = vec![0.0; c];
    let mut v = vec![0.0; c];
    let mut grad_w = vec![0.0; c];
    let mut grad_pre = vec![0.0; c];
    let mut err = vec![0.0; d];
    let mut best_loss = f64::INFINITY;
    let mut last_check = f64::INFINITY;

    let ramp = if config.steps > 1 {
        (config.reg_factor_final / config.reg_factor_init)
            .powf(1.0 / (config.steps as f64 - 1.0))
    } else {
        1.0
    };
    let mut reg_factor = config.reg_factor_init;

    for step in 0..config.steps {
        let weights = softmax(&pre);
        // err = reconstruction - h
        for i in 0..d {
            err[i] = -h[i];
        }
        for (wc, &ci) in weights.iter().zip(support) {
            for i in 0..d {
                err[i] += wc * latents[ci][i];
            }
        }
        let mut loss: f64 = err.iter().map(|e| e * e).sum();

        // dL/dw_c = 2 <err, h^c>, then through the softmax Jacobian.
        for (gc, &ci) in grad_w.iter_mut().zip(support) {
            let mut acc = 0.0;
            for i in 0..d {
                acc += err[i] * latents[ci][i];
            }
            *gc = 2.0 * acc;
        }
        // L1 ramp on the C-K smallest mixture weights. Applied before the
        // softmax Jacobian so the penalty moves mass from the light
        // members onto the heavy ones instead of freezing pre-weights.
        if n_reg > 0 {
            let order = argsort_asc(&weights);
            for &idx in &order[..n_reg] {
                loss += reg_factor * weights[idx];
                grad_w[idx] += reg_factor;
            }
        }

        let dot: f64 = weights.iter().zip(&grad_w).map(|(w, g)| w * g).sum();
        for k in 0..c {
            grad_pre[k] = weights[k] * (grad_w[k] - dot);
        }

        if !loss.is_finite() {
            return Err(Error::Diverged { step });
        }

        if config.early_stop {
            if loss < best_loss {
                best_loss = loss;
            }
            if step % 100 == 0 {
                if last_check - best_loss < 1e-9 && step > 0 {
                    break;
                }
                last_check = best_loss;
            }
        }

        let t = step as i32 + 1;
        let bc1 = 1.0 - config.beta1.powi(t);
        let bc2 = 1.0 - config.beta2.powi(t);
        for k in 0..c {
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad_pre[k];
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad_pre[k] * grad_pre[k];
            pre[k] -= config.learning_rate * (m[k] / bc1) / ((v[k] / bc2).sqrt() + config.eps);
        }
        reg_factor *= ramp;
    }
    Ok(pre)
}

fn finalize(
    h: &[f64],
    corpus: &Corpus,
    weights: Vec<f64>,
    activity_threshold: f64,
) -> Result<Decomposition> {
    let reconstruction = reconstruct_latent(corpus, &weights)?;
    let diff: Vec<f64> = h.iter().zip(&reconstruction).map(|(a, b)| a - b).collect();
    let residual = l2_norm(&diff);
    let active_count = weights.iter().filter(|&&w| w > activity_threshold).count();
    Ok(Decomposition {
        weights,
        residual,
        reconstruction,
        active_count,
    })
}

/// Decomposes a batch of latents against a shared corpus, in parallel
/// when the `parallel` feature is enabled. Per-example results are
/// deterministic and order-preserving either way.
pub fn fit_decomposition_batch(
    hs: &[Vec<f64>],
    corpus: &Corpus,
    config: &DecompositionConfig,
) -> Result<Vec<Decomposition>> {
    try_par_map(hs, |h| fit_decomposition(h, corpus, config))
}

/// Explicitly sequential variant of [`fit_decomposition_batch`], kept for
/// the benchmark suite.
pub fn fit_decomposition_batch_seq(
    hs: &[Vec<f64>],
    corpus: &Corpus,
    config: &DecompositionConfig,
) -> Result<Vec<Decomposition>> {
    hs.iter()
        .map(|h| fit_decomposition(h, corpus, config))
        .collect()
}

/// Output-space precision bound: returns
/// (||l(reconstruction) - l(h)||, ||A||_op * residual).
/// The head bias cancels in the difference, so only the linear part
/// matters; callers assert lhs <= rhs + 1e-9.
pub fn output_error_bound(
    model: &SplitModel,
    h: &[f64],
    decomposition: &Decomposition,
) -> Result<(f64, f64)> {
    let y_recon = model.forward_head(&decomposition.reconstruction)?;
    let y_true = model.forward_head(h)?;
    let diff: Vec<f64> = y_recon.iter().zip(&y_true).map(|(a, b)| a - b).collect();
    let lhs = l2_norm(&diff);
    let rhs = operator_norm(&model.head_weight, 1000, 1e-13) * decomposition.residual;
    Ok((lhs, rhs))
}

/// True iff the corpus latents are affinely independent, so every hull
/// point has a unique decomposition. Checked via the smallest singular
/// value of the (d_h + 1) x C matrix stacking the latents over a row of
/// ones; independent iff it exceeds `tol`.
pub fn affine_independence(corpus: &Corpus, tol: f64) -> bool {
    let c = corpus.len();
    let d = corpus.d_h();
    // More than d_h + 1 points can never be affinely independent.
    if c > d + 1 {
        return false;
    }
    let mut data = Vec::with_capacity((d + 1) * c);
    for i in 0..d {
        for h in corpus.latents() {
            data.push(h[i]);
        }
    }
    data.extend(std::iter::repeat(1.0).take(c));
    let stacked = Matrix::new(d + 1, c, data).expect("sized above");
    smallest_singular_value(&stacked) > tol
}

/// Weighted projection sum Σ_c w_c p_c_i accumulated for reporting.
pub fn weighted_projection_sum(weights: &[f64], projections: &Matrix) -> f64 {
    let mut acc = 0.0;
    for (c, w) in weights.iter().enumerate() {
        for i in 0..projections.cols {
            acc += w * projections.get(c, i);
        }
    }
    acc
}

/// Convenience: inner product of the residual direction with a vector;
/// used by diagnostics.
pub fn residual_alignment(h: &[f64], decomposition: &Decomposition, v: &[f64]) -> Result<f64> {
    let diff: Vec<f64> = h
        .iter()
        .zip(&decomposition.reconstruction)
        .map(|(a, b)| a - b)
        .collect();
    inner(&diff, v)
}
