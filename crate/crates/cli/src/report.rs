//! ExplanationReport construction and serialization. The JSON layout is
//! published in docs/report_schema.json; SCHEMA_VERSION bumps on any
//! breaking change.

use serde::Serialize;

use simplex_core::numerics::argsort_desc;
use simplex_core::{AttributionResult, Baseline, BaselineKind, Corpus, Decomposition, SplitModel};

use crate::error::CliResult;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct ExplanationReport {
    pub schema_version: u32,
    pub test_input: Vec<f64>,
    pub test_logits: Vec<f64>,
    pub test_probs: Vec<f64>,
    pub decomposition: DecompositionSection,
    /// "ok" or "degenerate_shift" (test latent equals baseline latent;
    /// path attributions are undefined there).
    pub attribution_status: String,
    /// Active corpus examples, sorted by descending weight.
    pub corpus_blocks: Vec<CorpusBlock>,
    pub baseline: BaselineSection,
    pub config: ConfigEcho,
}

#[derive(Serialize)]
pub struct DecompositionSection {
    pub weights: Vec<f64>,
    pub residual: f64,
    /// Indices of active corpus examples, sorted by descending weight.
    pub active: Vec<usize>,
}

#[derive(Serialize)]
pub struct CorpusBlock {
    pub index: usize,
    pub input: Vec<f64>,
    pub prediction: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<Vec<f64>>,
    pub weight: f64,
    /// Absent when the shift is degenerate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projections: Option<Vec<FeatureProjection>>,
}

#[derive(Serialize)]
pub struct FeatureProjection {
    pub feature: usize,
    /// w^c p^c_i.
    pub weighted_projection: f64,
    /// "aligned" (positive) or "opposed" (negative).
    pub tag: String,
}

#[derive(Serialize)]
pub struct BaselineSection {
    pub kind: String,
    pub input: Vec<f64>,
}

#[derive(Serialize)]
pub struct ConfigEcho {
    pub n_bins: usize,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

pub fn baseline_kind_name(kind: BaselineKind) -> &'static str {
    match kind {
        BaselineKind::ZeroInput => "zero_input",
        BaselineKind::TrainingMean => "training_mean",
        BaselineKind::Custom => "custom",
    }
}

/// Assembles the report for one test example. `attribution` is None when
/// the latent shift was degenerate.
#[allow(clippy::too_many_arguments)]
pub fn build_report(
    model: &SplitModel,
    corpus: &Corpus,
    test_input: &[f64],
    decomposition: &Decomposition,
    attribution: Option<&AttributionResult>,
    baseline: &Baseline,
    activity_threshold: f64,
    steps: usize,
    n_bins: usize,
    k: Option<usize>,
) -> CliResult<ExplanationReport> {
    let (logits, probs) = model.predict(test_input)?;
    let order = argsort_desc(&decomposition.weights);
    let active: Vec<usize> = order
        .into_iter()
        .filter(|&c| decomposition.weights[c] > activity_threshold)
        .collect();
    let mut blocks = Vec::with_capacity(active.len());
    for &c in &active {
        let projections = attribution.map(|attr| {
            (0..attr.weighted_projections.cols)
                .map(|i| {
                    let v = attr.weighted_projections.get(c, i);
                    FeatureProjection {
                        feature: i,
                        weighted_projection: v,
                        tag: if v >= 0.0 { "aligned" } else { "opposed" }.to_string(),
                    }
                })
                .collect()
        });
        blocks.push(CorpusBlock {
            index: c,
            input: corpus.inputs().get(c).cloned().unwrap_or_default(),
            prediction: corpus
                .predictions()
                .and_then(|p| p.get(c).cloned())
                .unwrap_or_default(),
            label: corpus.labels().and_then(|l| l.get(c).cloned()),
            weight: decomposition.weights[c],
            projections,
        });
    }
    Ok(ExplanationReport {
        schema_version: SCHEMA_VERSION,
        test_input: test_input.to_vec(),
        test_logits: logits,
        test_probs: probs,
        decomposition: DecompositionSection {
            weights: decomposition.weights.clone(),
            residual: decomposition.residual,
            active,
        },
        attribution_status: if attribution.is_some() {
            "ok".to_string()
        } else {
            "degenerate_shift".to_string()
        },
        corpus_blocks: blocks,
        baseline: BaselineSection {
            kind: baseline_kind_name(baseline.kind).to_string(),
            input: baseline.input.clone(),
        },
        config: ConfigEcho { n_bins, steps, k },
    })
}

pub fn to_json(report: &ExplanationReport) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(report)
        .map_err(|e| crate::error::CliError::Data(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
