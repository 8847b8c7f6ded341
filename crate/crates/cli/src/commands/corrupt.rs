//! `simplex corrupt`: corpus-corruption experiment. For each test
//! example and each n, the n most important corpus features (by
//! projection magnitude and by integrated-gradient magnitude) are reset
//! to the baseline value and the residual increase is recorded.

use simplex_core::evaluation::corruption_delta;
use simplex_core::numerics::Matrix;
use simplex_core::{
    integrated_gradients, load_checkpoint, projected_jacobians, DEFAULT_N_BINS,
};

use crate::commands::explain::baseline_from_config;
use crate::commands::{decomposition_config, load_corpus, write_file};
use crate::config::RunConfig;
use crate::data::{features, fmt17, load_dataset};
use crate::error::{CliError, CliResult};
use crate::svg::SvgDoc;
use crate::CommonArgs;

const ALLOWED: &[&str] = &[
    "checkpoint",
    "corpus",
    "corpus_labels",
    "test",
    "test_labels",
    "n_classes",
    "n_list",
    "steps",
    "n_bins",
    "baseline",
    "seed",
];

pub fn run(args: &CommonArgs) -> CliResult<()> {
    let config = RunConfig::load(&args.config, ALLOWED)?;
    let model = load_checkpoint(&config.path_req("checkpoint")?)?;
    let n_classes = config.parse_opt::<usize>("n_classes")?;
    let (corpus, _) = load_corpus(&config, &model, "corpus", n_classes)?;
    let test = load_dataset(&config.path_req("test")?, None, n_classes)?;
    let test_inputs = features(&test);
    let n_list = config
        .list_opt::<usize>("n_list")?
        .ok_or_else(|| CliError::Usage("config: missing required key `n_list`".into()))?;
    let d_x = model.d_x();
    // Validate the whole sweep before any work.
    for &n in &n_list {
        if n > d_x {
            return Err(CliError::Usage(format!(
                "n_list entry {n} exceeds the number of features {d_x}"
            )));
        }
    }
    let dec_cfg = decomposition_config(&config)?;
    let n_bins = config.parse_or("n_bins", DEFAULT_N_BINS)?;
    let baseline = baseline_from_config(&config, &model, corpus.inputs())?;

    println!(
        "corrupting corpus of {} for {} test examples, n in {:?}",
        corpus.len(),
        test_inputs.len(),
        n_list
    );

    let mut csv = String::from("test_index,n,delta_projection,delta_ig\n");
    let mut boxes: Vec<(String, Vec<f64>)> = Vec::new();
    for &n in &n_list {
        boxes.push((format!("proj n={n}"), Vec::new()));
        boxes.push((format!("ig n={n}"), Vec::new()));
    }

    for (t, x) in test_inputs.iter().enumerate() {
        let h = model.forward_latent(x)?;
        let projections = projected_jacobians(&model, &h, &baseline, &corpus, n_bins)?;
        let importance_proj = abs_matrix(&projections);
        let (logits, _) = model.predict(x)?;
        let class = argmax(&logits);
        let ig_rows: Vec<Vec<f64>> = corpus
            .inputs()
            .iter()
            .map(|x_c| integrated_gradients(&model, &baseline, x_c, n_bins, class))
            .collect::<Result<_, _>>()?;
        let importance_ig = abs_matrix(&Matrix::from_rows(&ig_rows)?);

        for (ni, &n) in n_list.iter().enumerate() {
            let d_proj = corruption_delta(
                &model,
                &corpus,
                &h,
                &importance_proj,
                n,
                &baseline.input,
                &dec_cfg,
            )?;
            let d_ig = corruption_delta(
                &model,
                &corpus,
                &h,
                &importance_ig,
                n,
                &baseline.input,
                &dec_cfg,
            )?;
            csv.push_str(&format!("{t},{n},{},{}\n", fmt17(d_proj), fmt17(d_ig)));
            boxes[2 * ni].1.push(d_proj);
            boxes[2 * ni + 1].1.push(d_ig);
        }
    }
    write_file(&args.out.join("corruption.csv"), &csv)?;

    let mut doc = SvgDoc::new();
    doc.box_panel("residual increase by importance ranking", &boxes);
    write_file(&args.out.join("corruption.svg"), &doc.finish())?;
    println!("wrote corruption results to {}", args.out.display());
    Ok(())
}

fn abs_matrix(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for v in &mut out.data {
        *v = v.abs();
    }
    out
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
