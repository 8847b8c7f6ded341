//! Integrated Jacobians, Jacobian projections and Integrated Gradients
//! along straight-line paths from a baseline to each corpus example.
//!
//! All path integrals use the same right-endpoint Riemann grid
//! (t = n/N for n = 1..N), so the consistency identities between the
//! three quantities hold to float precision on shared grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SplitModel;
use crate::numerics::{inner, l2_norm, Matrix};
use crate::parallel::try_par_map;
use crate::simplex::Corpus;

pub const DEFAULT_N_BINS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    ZeroInput,
    TrainingMean,
    Custom,
}

/// Reference input anchoring the path attributions, with its latent
/// representation cached at construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Baseline {
    pub input: Vec<f64>,
    pub latent: Vec<f64>,
    pub kind: BaselineKind,
}

impl Baseline {
    /// All-zero input (the "black image" baseline).
    pub fn zero_input(model: &SplitModel) -> Result<Self> {
        let input = vec![0.0; model.d_x()];
        let latent = model.forward_latent(&input)?;
        Ok(Baseline {
            input,
            latent,
            kind: BaselineKind::ZeroInput,
        })
    }

    /// Feature-wise mean of a reference population.
    pub fn training_mean(model: &SplitModel, data: &[Vec<f64>]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("baseline population"));
        }
        let d = model.d_x();
        let mut input = vec![0.0; d];
        for x in data {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    context: "baseline population",
                    expected: d,
                    got: x.len(),
                });
            }
            for i in 0..d {
                input[i] += x[i];
            }
        }
        for v in &mut input {
            *v /= data.len() as f64;
        }
        let latent = model.forward_latent(&input)?;
        Ok(Baseline {
            input,
            latent,
            kind: BaselineKind::TrainingMean,
        })
    }

    pub fn custom(model: &SplitModel, input: Vec<f64>) -> Result<Self> {
        let latent = model.forward_latent(&input)?;
        Ok(Baseline {
            input,
            latent,
            kind: BaselineKind::Custom,
        })
    }
}

/// Projections and weighted projections of a test example against a
/// corpus; the full Jacobian tensor is materialized only on demand.
#[derive(Debug, Clone)]
pub struct AttributionResult {
    /// p[c][i]: projection of feature i of corpus example c onto the
    /// latent shift.
    pub projections: Matrix,
    /// w_c * p[c][i].
    pub weighted_projections: Matrix,
    /// j[c][i]: latent vectors, one per (corpus example, feature).
    pub jacobians: Option<Vec<Vec<Vec<f64>>>>,
    pub n_bins: usize,
}

/// Integrated Jacobian of `x_c` against the baseline: one latent vector
/// per input feature,
/// j_i = (x_c_i - x0_i) * (1/N) Σ_n ∂g/∂x_i at x0 + (n/N)(x_c - x0).
/// Computed with d_h unit-covector pullbacks per grid point.
pub fn integrated_jacobian(
    model: &SplitModel,
    baseline: &Baseline,
    x_c: &[f64],
    n_bins: usize,
) -> Result<Vec<Vec<f64>>> {
    let d_x = model.d_x();
    let d_h = model.d_h();
    if x_c.len() != d_x {
        return Err(Error::DimensionMismatch {
            context: "integrated_jacobian",
            expected: d_x,
            got: x_c.len(),
        });
    }
    if n_bins == 0 {
        return Err(Error::InvalidArgument("n_bins must be >= 1".into()));
    }
    // avg[i][k] accumulates the average of ∂g_k/∂x_i over the grid.
    let mut avg = vec![vec![0.0; d_h]; d_x];
    let mut point = vec![0.0; d_x];
    let mut covector = vec![0.0; d_h];
    for n in 1..=n_bins {
        let t = n as f64 / n_bins as f64;
        for i in 0..d_x {
            point[i] = baseline.input[i] + t * (x_c[i] - baseline.input[i]);
        }
        for k in 0..d_h {
            covector[k] = 1.0;
            let row = model.pullback_gradient(&point, &covector)?;
            covector[k] = 0.0;
            for i in 0..d_x {
                avg[i][k] += row[i];
            }
        }
    }
    let scale = 1.0 / n_bins as f64;
    for (i, col) in avg.iter_mut().enumerate() {
        let pre = (x_c[i] - baseline.input[i]) * scale;
        for v in col.iter_mut() {
            *v *= pre;
        }
    }
    Ok(avg)
}

/// Jacobian projections for a whole corpus: p[c][i] = <h - h0, j_c_i> /
/// ||h - h0||^2, accumulated with a single fixed covector
/// v = (h - h0)/||h - h0||^2, one pullback per (bin, corpus example).
pub fn projected_jacobians(
    model: &SplitModel,
    h: &[f64],
    baseline: &Baseline,
    corpus: &Corpus,
    n_bins: usize,
) -> Result<Matrix> {
    let d_x = model.d_x();
    let d_h = model.d_h();
    if h.len() != d_h {
        return Err(Error::DimensionMismatch {
            context: "projected_jacobians",
            expected: d_h,
            got: h.len(),
        });
    }
    if n_bins == 0 {
        return Err(Error::InvalidArgument("n_bins must be >= 1".into()));
    }
    let shift: Vec<f64> = h.iter().zip(&baseline.latent).map(|(a, b)| a - b).collect();
    let norm_sq = inner(&shift, &shift)?;
    if norm_sq == 0.0 {
        return Err(Error::DegenerateShift);
    }
    let covector: Vec<f64> = shift.iter().map(|s| s / norm_sq).collect();

    let rows = try_par_map(corpus.inputs(), |x_c| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; d_x];
        let mut point = vec![0.0; d_x];
        for n in 1..=n_bins {
            let t = n as f64 / n_bins as f64;
            for i in 0..d_x {
                point[i] = baseline.input[i] + t * (x_c[i] - baseline.input[i]);
            }
            let grad = model.pullback_gradient(&point, &covector)?;
            for i in 0..d_x {
                acc[i] += grad[i];
            }
        }
        let scale = 1.0 / n_bins as f64;
        for i in 0..d_x {
            acc[i] *= (x_c[i] - baseline.input[i]) * scale;
        }
        Ok(acc)
    })?;
    Matrix::from_rows(&rows)
}

/// Integrated Gradients on logit `output_index`, same Riemann grid as
/// the integrated Jacobians. Equals row `output_index` of the head
/// applied to the integrated Jacobian.
pub fn integrated_gradients(
    model: &SplitModel,
    baseline: &Baseline,
    x_c: &[f64],
    n_bins: usize,
    output_index: usize,
) -> Result<Vec<f64>> {
    let d_x = model.d_x();
    if x_c.len() != d_x {
        return Err(Error::DimensionMismatch {
            context: "integrated_gradients",
            expected: d_x,
            got: x_c.len(),
        });
    }
    if output_index >= model.d_y() {
        return Err(Error::InvalidArgument(format!(
            "output index {} out of range for d_y {}",
            output_index,
            model.d_y()
        )));
    }
    if n_bins == 0 {
        return Err(Error::InvalidArgument("n_bins must be >= 1".into()));
    }
    // ∂f_k/∂x = (row k of A) pulled back through g.
    let covector = model.head_weight.row(output_index).to_vec();
    let mut acc = vec![0.0; d_x];
    let mut point = vec![0.0; d_x];
    for n in 1..=n_bins {
        let t = n as f64 / n_bins as f64;
        for i in 0..d_x {
            point[i] = baseline.input[i] + t * (x_c[i] - baseline.input[i]);
        }
        let grad = model.pullback_gradient(&point, &covector)?;
        for i in 0..d_x {
            acc[i] += grad[i];
        }
    }
    let scale = 1.0 / n_bins as f64;
    for i in 0..d_x {
        acc[i] *= (x_c[i] - baseline.input[i]) * scale;
    }
    Ok(acc)
}

/// Completeness deviation ||Σ_{c,i} w_c j_c_i - (h - h0)||, reported so
/// callers can compare it against the decomposition residual plus the
/// discretization tolerance.
pub fn completeness_check(
    jacobians: &[Vec<Vec<f64>>],
    weights: &[f64],
    h: &[f64],
    baseline: &Baseline,
) -> f64 {
    let d_h = h.len();
    let mut total = vec![0.0; d_h];
    for (w, per_feature) in weights.iter().zip(jacobians) {
        for j in per_feature {
            for k in 0..d_h {
                total[k] += w * j[k];
            }
        }
    }
    let diff: Vec<f64> = (0..d_h)
        .map(|k| total[k] - (h[k] - baseline.latent[k]))
        .collect();
    l2_norm(&diff)
}

/// Projections plus weighted projections (and the Jacobian tensor when
/// `keep_jacobians` is set) for one test example against a corpus.
pub fn attribute(
    model: &SplitModel,
    h: &[f64],
    baseline: &Baseline,
    corpus: &Corpus,
    weights: &[f64],
    n_bins: usize,
    keep_jacobians: bool,
) -> Result<AttributionResult> {
    let projections = projected_jacobians(model, h, baseline, corpus, n_bins)?;
    let mut weighted = projections.clone();
    for c in 0..weighted.rows {
        for i in 0..weighted.cols {
            let v = weighted.get(c, i) * weights[c];
            weighted.set(c, i, v);
        }
    }
    let jacobians = if keep_jacobians {
        Some(try_par_map(corpus.inputs(), |x_c| {
            integrated_jacobian(model, baseline, x_c, n_bins)
        })?)
    } else {
        None
    };
    Ok(AttributionResult {
        projections,
        weighted_projections: weighted,
        jacobians,
        n_bins,
    })
}
