//! `simplex explain`: one JSON report and one SVG per test example.

use simplex_core::{
    attribute, fit_decomposition_batch, load_checkpoint, Baseline, Error, SplitModel,
    DEFAULT_N_BINS,
};

use crate::commands::{decomposition_config, load_corpus, write_file};
use crate::config::RunConfig;
use crate::data::{features, load_dataset};
use crate::error::{CliError, CliResult};
use crate::report::{build_report, to_json, ExplanationReport};
use crate::svg::SvgDoc;
use crate::CommonArgs;

const ALLOWED: &[&str] = &[
    "checkpoint",
    "corpus",
    "corpus_labels",
    "test",
    "test_labels",
    "n_classes",
    "steps",
    "k_active",
    "n_bins",
    "baseline",
    "seed",
];

pub fn baseline_from_config(
    config: &RunConfig,
    model: &SplitModel,
    corpus_inputs: &[Vec<f64>],
) -> CliResult<Baseline> {
    match config.str_opt("baseline").unwrap_or("zero") {
        "zero" => Ok(Baseline::zero_input(model)?),
        "mean" => Ok(Baseline::training_mean(model, corpus_inputs)?),
        other => Err(CliError::Usage(format!(
            "config `baseline`: unknown value `{other}` (zero | mean)"
        ))),
    }
}

pub fn run(args: &CommonArgs) -> CliResult<()> {
    let config = RunConfig::load(&args.config, ALLOWED)?;
    let model = load_checkpoint(&config.path_req("checkpoint")?)?;
    let n_classes = config.parse_opt::<usize>("n_classes")?;
    let (corpus, _) = load_corpus(&config, &model, "corpus", n_classes)?;
    let test_path = config.path_req("test")?;
    let test = load_dataset(&test_path, None, n_classes)?;
    let test_inputs = features(&test);
    let dec_cfg = decomposition_config(&config)?;
    let n_bins = config.parse_or("n_bins", DEFAULT_N_BINS)?;
    let baseline = baseline_from_config(&config, &model, corpus.inputs())?;

    println!(
        "explaining {} test examples against a corpus of {}",
        test_inputs.len(),
        corpus.len()
    );
    let latents: Vec<Vec<f64>> = test_inputs
        .iter()
        .map(|x| model.forward_latent(x))
        .collect::<Result<_, _>>()?;
    let decompositions = fit_decomposition_batch(&latents, &corpus, &dec_cfg)?;

    for (i, ((x, h), dec)) in test_inputs
        .iter()
        .zip(&latents)
        .zip(&decompositions)
        .enumerate()
    {
        // A degenerate shift is reported, not fatal: the decomposition
        // stands on its own and the attribution section carries a marker.
        let attribution = match attribute(
            &model,
            h,
            &baseline,
            &corpus,
            &dec.weights,
            n_bins,
            false,
        ) {
            Ok(attr) => Some(attr),
            Err(Error::DegenerateShift) => None,
            Err(e) => return Err(e.into()),
        };
        let report = build_report(
            &model,
            &corpus,
            x,
            dec,
            attribution.as_ref(),
            &baseline,
            dec_cfg.activity_threshold,
            dec_cfg.steps,
            n_bins,
            dec_cfg.k_active,
        )?;
        write_file(
            &args.out.join(format!("report_{i:03}.json")),
            &to_json(&report)?,
        )?;
        write_file(
            &args.out.join(format!("report_{i:03}.svg")),
            &render_svg(&report),
        )?;
    }
    println!("wrote {} reports to {}", test_inputs.len(), args.out.display());
    Ok(())
}

fn render_svg(report: &ExplanationReport) -> String {
    let mut doc = SvgDoc::new();
    let labels: Vec<String> = (0..report.decomposition.weights.len())
        .map(|c| format!("c{c}"))
        .collect();
    doc.bar_panel(
        &format!(
            "corpus weights (residual {:.3e})",
            report.decomposition.residual
        ),
        &labels,
        &report.decomposition.weights,
    );
    for block in &report.corpus_blocks {
        if let Some(projections) = &block.projections {
            let labels: Vec<String> = projections
                .iter()
                .map(|p| format!("f{}", p.feature))
                .collect();
            let values: Vec<f64> = projections.iter().map(|p| p.weighted_projection).collect();
            doc.bar_panel(
                &format!(
                    "corpus example {} (weight {:.3}) weighted projections",
                    block.index, block.weight
                ),
                &labels,
                &values,
            );
        }
    }
    doc.finish()
}
