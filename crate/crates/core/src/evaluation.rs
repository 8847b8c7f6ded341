//! Experiment harness: R-squared metrics, residual-sorted detection
//! curves, the corpus-corruption experiment, synthetic data generators
//! and IDX image ingestion.

use std::io::Read as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SplitModel;
use crate::numerics::{argsort_desc, Matrix};
use crate::rng::CounterRng;
use crate::simplex::{fit_decomposition, Corpus, DecompositionConfig};

/// One (ground truth, approximation) vector pair.
#[derive(Debug, Clone)]
pub struct R2Pair {
    pub truth: Vec<f64>,
    pub approx: Vec<f64>,
}

/// R² = 1 - Σ||truth - approx||² / Σ||truth - mean(truth)||², with
/// vector norms. Compares the approximation against the dummy that
/// predicts the test average everywhere.
pub fn r2_score(pairs: &[R2Pair]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument(
            "r2_score needs at least 2 pairs".into(),
        ));
    }
    let d = pairs[0].truth.len();
    for p in pairs {
        if p.truth.len() != d || p.approx.len() != d {
            return Err(Error::DimensionMismatch {
                context: "r2_score",
                expected: d,
                got: p.truth.len().max(p.approx.len()),
            });
        }
    }
    let mut mean = vec![0.0; d];
    for p in pairs {
        for i in 0..d {
            mean[i] += p.truth[i];
        }
    }
    for m in &mut mean {
        *m /= pairs.len() as f64;
    }
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for p in pairs {
        for i in 0..d {
            let e = p.truth[i] - p.approx[i];
            ss_res += e * e;
            let t = p.truth[i] - mean[i];
            ss_tot += t * t;
        }
    }
    if ss_tot == 0.0 {
        return Err(Error::InvalidArgument(
            "all truth vectors identical: R² undefined".into(),
        ));
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Cumulative outlier counts along a score-sorted inspection order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionCurve {
    /// counts[n-1] = number of true outliers among the n highest scores.
    pub counts: Vec<usize>,
    pub labels_total: usize,
}

/// Sorts the test examples by decreasing score (ties toward the lower
/// index) and accumulates true-outlier counts.
pub fn detection_curve(scores: &[f64], outlier_flags: &[bool]) -> Result<DetectionCurve> {
    if scores.len() != outlier_flags.len() {
        return Err(Error::DimensionMismatch {
            context: "detection_curve",
            expected: scores.len(),
            got: outlier_flags.len(),
        });
    }
    let order = argsort_desc(scores);
    let mut counts = Vec::with_capacity(scores.len());
    let mut acc = 0usize;
    for idx in order {
        if outlier_flags[idx] {
            acc += 1;
        }
        counts.push(acc);
    }
    Ok(DetectionCurve {
        counts,
        labels_total: outlier_flags.iter().filter(|&&f| f).count(),
    })
}

impl DetectionCurve {
    /// Ideal curve that surfaces every outlier first.
    pub fn ideal(total: usize, outliers: usize) -> DetectionCurve {
        DetectionCurve {
            counts: (1..=total).map(|n| n.min(outliers)).collect(),
            labels_total: outliers,
        }
    }

    /// Mean and standard deviation of the random-inspection curve,
    /// estimated over `trials` seeded shuffles.
    pub fn random_reference(
        total: usize,
        outlier_flags: &[bool],
        trials: usize,
        seed: u64,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut rng = CounterRng::new(seed);
        let mut sums = vec![0.0; total];
        let mut sq_sums = vec![0.0; total];
        let mut order: Vec<usize> = (0..total).collect();
        for _ in 0..trials {
            rng.shuffle(&mut order);
            let mut acc = 0.0;
            for (n, &idx) in order.iter().enumerate() {
                if outlier_flags[idx] {
                    acc += 1.0;
                }
                sums[n] += acc;
                sq_sums[n] += acc * acc;
            }
        }
        let t = trials as f64;
        let mean: Vec<f64> = sums.iter().map(|s| s / t).collect();
        let std: Vec<f64> = sq_sums
            .iter()
            .zip(&mean)
            .map(|(sq, m)| (sq / t - m * m).max(0.0).sqrt())
            .collect();
        (mean, std)
    }
}

/// Corrupts each corpus example by resetting its `n` highest-importance
/// features (per its row of `importance`, ranked by raw value, ties
/// toward the lower feature index) to the baseline value, re-encodes the
/// corrupted corpus through the latent map, refits the decomposition for
/// `h` and returns the residual increase over the uncorrupted fit.
pub fn corruption_delta(
    model: &SplitModel,
    corpus: &Corpus,
    h: &[f64],
    importance: &Matrix,
    n: usize,
    baseline_value_per_feature: &[f64],
    config: &DecompositionConfig,
) -> Result<f64> {
    let d_x = model.d_x();
    if n > d_x {
        return Err(Error::InvalidArgument(format!(
            "n = {n} exceeds the number of features {d_x}"
        )));
    }
    if importance.rows != corpus.len() || importance.cols != d_x {
        return Err(Error::DimensionMismatch {
            context: "corruption importance",
            expected: corpus.len() * d_x,
            got: importance.rows * importance.cols,
        });
    }
    if baseline_value_per_feature.len() != d_x {
        return Err(Error::DimensionMismatch {
            context: "corruption baseline",
            expected: d_x,
            got: baseline_value_per_feature.len(),
        });
    }
    let r_orig = fit_decomposition(h, corpus, config)?.residual;
    let mut corrupted = corpus.inputs().to_vec();
    for (c, x) in corrupted.iter_mut().enumerate() {
        let order = argsort_desc(importance.row(c));
        for &i in &order[..n] {
            x[i] = baseline_value_per_feature[i];
        }
    }
    let corrupted_corpus = Corpus::from_inputs(model, corrupted, None)?;
    let r_cor = fit_decomposition(h, &corrupted_corpus, config)?.residual;
    Ok(r_cor - r_orig)
}

/// AR(2) generator settings. `sign_flip` negates the first coefficient,
/// which produces the oscillating variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ar2Config {
    pub phi1: f64,
    pub phi2: f64,
    /// Standard deviation of the innovation noise.
    pub noise_sigma: f64,
    /// Series length T; `length + 1` values are generated so every
    /// window has a next-step target.
    pub length: usize,
    pub window: usize,
    /// Number of independent series.
    pub count: usize,
    pub seed: u64,
    pub sign_flip: bool,
}

impl Default for Ar2Config {
    fn default() -> Self {
        Ar2Config {
            phi1: 0.7,
            phi2: 0.25,
            noise_sigma: 0.1,
            length: 50,
            window: 10,
            count: 100,
            seed: 0,
            sign_flip: false,
        }
    }
}

/// One AR(2) trajectory of `steps` values from explicit initial
/// conditions: x_t = ±phi1 x_{t-1} + phi2 x_{t-2} + noise.
pub fn ar2_series(
    config: &Ar2Config,
    x1: f64,
    x2: f64,
    steps: usize,
    rng: &mut CounterRng,
) -> Vec<f64> {
    let phi1 = if config.sign_flip {
        -config.phi1
    } else {
        config.phi1
    };
    let mut series = Vec::with_capacity(steps);
    series.push(x1);
    if steps > 1 {
        series.push(x2);
    }
    for _ in 2..steps {
        let prev = series[series.len() - 1];
        let prev2 = series[series.len() - 2];
        let noise = if config.noise_sigma > 0.0 {
            config.noise_sigma * rng.normal()
        } else {
            0.0
        };
        series.push(phi1 * prev + config.phi2 * prev2 + noise);
    }
    series
}

/// Generates `count` AR(2) series with N(0,1) initial conditions and
/// slices them into sliding windows with next-step targets.
pub fn gen_ar2(config: &Ar2Config) -> Vec<(Vec<f64>, Vec<f64>)> {
    assert!(config.length > config.window && config.window >= 2);
    let mut rng = CounterRng::new(config.seed);
    let mut dataset = Vec::new();
    for _ in 0..config.count {
        let x1 = rng.normal();
        let x2 = rng.normal();
        let series = ar2_series(config, x1, x2, config.length + 1, &mut rng);
        for start in 0..=(config.length - config.window) {
            let window = series[start..start + config.window].to_vec();
            let target = vec![series[start + config.window]];
            dataset.push((window, target));
        }
    }
    dataset
}

/// Synthetic covariate-shift pair: both groups come from the same fixed
/// two-class Gaussian-mixture generator (identical seeds produce
/// identical draws), and the shifted group's features are translated by
/// `shift`. Labels follow a fixed nonlinear rule on the features so a
/// trained model has signal.
#[allow(clippy::type_complexity)]
pub fn gen_tabular_shifted(
    n_per_group: usize,
    shift: &[f64],
    seed: u64,
) -> (Vec<(Vec<f64>, Vec<f64>)>, Vec<(Vec<f64>, Vec<f64>)>) {
    let in_dist = gen_tabular_group(n_per_group, shift.len(), seed, None);
    let shifted = gen_tabular_group(n_per_group, shift.len(), seed, Some(shift));
    (in_dist, shifted)
}

fn gen_tabular_group(
    n: usize,
    d: usize,
    seed: u64,
    shift: Option<&[f64]>,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = CounterRng::new(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let component = rng.below(2) as f64;
        let mu = (2.0 * component - 1.0) * 0.8;
        let mut x: Vec<f64> = (0..d).map(|_| mu + rng.normal()).collect();
        if let Some(shift) = shift {
            for (xi, s) in x.iter_mut().zip(shift) {
                *xi += s;
            }
        }
        let label = tabular_label(&x);
        out.push((x, label));
    }
    out
}

/// Fixed nonlinear labelling rule for the synthetic tabular generator.
fn tabular_label(x: &[f64]) -> Vec<f64> {
    let score = match x.len() {
        0 => 0.0,
        1 => x[0],
        2 => x[0] * x[1],
        _ => x[0] * x[1] + 0.5 * x[2],
    };
    if score > 0.0 {
        vec![0.0, 1.0]
    } else {
        vec![1.0, 0.0]
    }
}

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// Parses an IDX image file (magic 0x00000803, big-endian dimensions)
/// into row-major pixel vectors scaled to [0, 1].
pub fn load_idx(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut file = std::fs::File::open(path)?;
    let mut header = [0u8; 16];
    file.read_exact(&mut header)
        .map_err(|_| Error::Idx("truncated header".into()))?;
    let magic = u32::from_be_bytes(header[0..4].try_into().unwrap());
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Idx(format!("bad image magic 0x{magic:08x}")));
    }
    let count = u32::from_be_bytes(header[4..8].try_into().unwrap()) as usize;
    let rows = u32::from_be_bytes(header[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_be_bytes(header[12..16].try_into().unwrap()) as usize;
    let pixels = rows
        .checked_mul(cols)
        .and_then(|p| p.checked_mul(count))
        .ok_or_else(|| Error::Idx("dimension overflow".into()))?;
    let mut data = Vec::with_capacity(pixels);
    file.read_to_end(&mut data)?;
    if data.len() != pixels {
        return Err(Error::Idx(format!(
            "expected {pixels} pixel bytes, found {}",
            data.len()
        )));
    }
    Ok(data
        .chunks(rows * cols)
        .map(|img| img.iter().map(|&b| b as f64 / 255.0).collect())
        .collect())
}

/// Parses an IDX label file (magic 0x00000801).
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let mut file = std::fs::File::open(path)?;
    let mut header = [0u8; 8];
    file.read_exact(&mut header)
        .map_err(|_| Error::Idx("truncated header".into()))?;
    let magic = u32::from_be_bytes(header[0..4].try_into().unwrap());
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::Idx(format!("bad label magic 0x{magic:08x}")));
    }
    let count = u32::from_be_bytes(header[4..8].try_into().unwrap()) as usize;
    let mut data = Vec::with_capacity(count);
    file.read_to_end(&mut data)?;
    if data.len() != count {
        return Err(Error::Idx(format!(
            "expected {count} label bytes, found {}",
            data.len()
        )));
    }
    Ok(data)
}

/// Writes a dataset as CSV: header `feature_0,...,feature_{d-1},target`,
/// UTF-8, LF line endings, floats with 17 significant digits. One-hot
/// targets are written as their class index.
pub fn write_dataset_csv(path: &Path, data: &[(Vec<f64>, Vec<f64>)]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let d = data[0].0.len();
    let mut out = String::new();
    for i in 0..d {
        out.push_str(&format!("feature_{i},"));
    }
    out.push_str("target\n");
    for (x, target) in data {
        for v in x {
            out.push_str(&format_float(*v));
            out.push(',');
        }
        let t = if target.len() == 1 {
            target[0]
        } else {
            argmax(target) as f64
        };
        out.push_str(&format_float(t));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a dataset CSV written by [`write_dataset_csv`] (or hand-made in
/// the same layout). When `n_classes` is given the target column is
/// interpreted as a class index and expanded one-hot; otherwise it is a
/// scalar regression target.
pub fn read_dataset_csv(path: &Path, n_classes: Option<usize>) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty CSV".into()))?;
    let n_cols = header.split(',').count();
    if n_cols < 2 {
        return Err(Error::InvalidArgument("CSV needs features and target".into()));
    }
    let d = n_cols - 1;
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_cols {
            return Err(Error::InvalidArgument(format!(
                "CSV line {}: expected {} fields, got {}",
                lineno + 2,
                n_cols,
                fields.len()
            )));
        }
        let mut x = Vec::with_capacity(d);
        for f in &fields[..d] {
            x.push(f.parse::<f64>().map_err(|e| {
                Error::InvalidArgument(format!("CSV line {}: {e}", lineno + 2))
            })?);
        }
        let raw: f64 = fields[d]
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("CSV line {}: {e}", lineno + 2)))?;
        let target = match n_classes {
            Some(k) => {
                let idx = raw as usize;
                if idx >= k {
                    return Err(Error::InvalidArgument(format!(
                        "CSV line {}: class {idx} out of range",
                        lineno + 2
                    )));
                }
                let mut one_hot = vec![0.0; k];
                one_hot[idx] = 1.0;
                one_hot
            }
            None => vec![raw],
        };
        out.push((x, target));
    }
    if out.is_empty() {
        return Err(Error::Empty("dataset CSV"));
    }
    Ok(out)
}

fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
