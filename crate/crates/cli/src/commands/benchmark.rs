//! `simplex benchmark`: sweep K and compare the decomposition against
//! KNN mixtures and the representer approximation. Emits metrics.csv
//! (method, K, seed, r2_latent, r2_output, residual_mean) and one SVG
//! line chart per metric.

use std::collections::BTreeMap;

use simplex_core::{
    fit_decomposition_batch, knn_distance, knn_uniform, load_checkpoint, r2_score,
    reconstruct_latent, representer_output, Corpus, CounterRng, R2Pair, SplitModel,
};

use crate::commands::{decomposition_config, resolve_seed, write_file};
use crate::config::RunConfig;
use crate::data::{features, fmt17, load_dataset, targets, Dataset};
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
    "k_list",
    "seeds",
    "lambda",
    "steps",
    "corpus_size",
    "test_size",
    "seed",
];

struct Row {
    method: &'static str,
    k: usize,
    seed: u64,
    r2_latent: Option<f64>,
    r2_output: f64,
    residual_mean: Option<f64>,
}

fn subsample(data: &Dataset, size: Option<usize>, rng: &mut CounterRng) -> CliResult<Dataset> {
    match size {
        None => Ok(data.clone()),
        Some(size) => {
            if size > data.len() {
                return Err(CliError::Usage(format!(
                    "requested subsample {size} exceeds dataset size {}",
                    data.len()
                )));
            }
            let mut order: Vec<usize> = (0..data.len()).collect();
            rng.shuffle(&mut order);
            Ok(order[..size].iter().map(|&i| data[i].clone()).collect())
        }
    }
}

fn latent_metrics(
    model: &SplitModel,
    hs: &[Vec<f64>],
    recons: &[Vec<f64>],
) -> CliResult<(f64, f64, f64)> {
    let latent_pairs: Vec<R2Pair> = hs
        .iter()
        .zip(recons)
        .map(|(h, r)| R2Pair {
            truth: h.clone(),
            approx: r.clone(),
        })
        .collect();
    let mut output_pairs = Vec::with_capacity(hs.len());
    let mut residual_sum = 0.0;
    for (h, r) in hs.iter().zip(recons) {
        output_pairs.push(R2Pair {
            truth: model.forward_head(h)?,
            approx: model.forward_head(r)?,
        });
        let diff: Vec<f64> = h.iter().zip(r).map(|(a, b)| a - b).collect();
        residual_sum += simplex_core::l2_norm(&diff);
    }
    Ok((
        r2_score(&latent_pairs)?,
        r2_score(&output_pairs)?,
        residual_sum / hs.len() as f64,
    ))
}

pub fn run(args: &CommonArgs) -> CliResult<()> {
    let config = RunConfig::load(&args.config, ALLOWED)?;
    let base_seed = resolve_seed(&config, args.seed)?;
    let model = load_checkpoint(&config.path_req("checkpoint")?)?;
    let n_classes = config.parse_opt::<usize>("n_classes")?;
    let corpus_data = load_dataset(&config.path_req("corpus")?, None, n_classes)?;
    let test_data = load_dataset(&config.path_req("test")?, None, n_classes)?;
    let k_list = config
        .list_opt::<usize>("k_list")?
        .ok_or_else(|| CliError::Usage("config: missing required key `k_list`".into()))?;
    let n_seeds = config.parse_or("seeds", 1u64)?;
    let lambda = config.parse_or("lambda", 0.1)?;
    let corpus_size = config.parse_opt::<usize>("corpus_size")?;
    let test_size = config.parse_opt::<usize>("test_size")?;
    let base_cfg = decomposition_config(&config)?;

    let mut rows: Vec<Row> = Vec::new();
    for s in 0..n_seeds {
        let seed = base_seed + s;
        let mut rng = CounterRng::new(seed);
        let corpus_sample = subsample(&corpus_data, corpus_size, &mut rng)?;
        let test_sample = subsample(&test_data, test_size, &mut rng)?;
        let labels = n_classes.map(|_| targets(&corpus_sample));
        let corpus = Corpus::from_inputs(&model, features(&corpus_sample), labels)?;
        let test_inputs = features(&test_sample);
        let hs: Vec<Vec<f64>> = test_inputs
            .iter()
            .map(|x| model.forward_latent(x))
            .collect::<Result<_, _>>()?;
        println!(
            "seed {seed}: corpus {} / test {} examples",
            corpus.len(),
            hs.len()
        );

        for &k in &k_list {
            if k == 0 || k > corpus.len() {
                return Err(CliError::Usage(format!(
                    "k_list entry {k} out of range 1..={}",
                    corpus.len()
                )));
            }
            // Decomposition restricted to K active corpus members.
            let cfg = simplex_core::DecompositionConfig {
                k_active: if k < corpus.len() { Some(k) } else { None },
                ..base_cfg.clone()
            };
            let decs = fit_decomposition_batch(&hs, &corpus, &cfg)?;
            let recons: Vec<Vec<f64>> = decs.iter().map(|d| d.reconstruction.clone()).collect();
            let (r2_l, r2_o, res) = latent_metrics(&model, &hs, &recons)?;
            rows.push(Row {
                method: "simplex",
                k,
                seed,
                r2_latent: Some(r2_l),
                r2_output: r2_o,
                residual_mean: Some(res),
            });

            type KnnFn = fn(&[f64], &Corpus, usize) -> simplex_core::Result<simplex_core::BaselineWeights>;
            for (method, weights_fn) in [
                ("knn_uniform", knn_uniform as KnnFn),
                ("knn_distance", knn_distance as KnnFn),
            ] {
                let recons: Vec<Vec<f64>> = hs
                    .iter()
                    .map(|h| {
                        let w = weights_fn(h, &corpus, k)?;
                        reconstruct_latent(&corpus, &w.weights)
                    })
                    .collect::<Result<_, _>>()?;
                let (r2_l, r2_o, res) = latent_metrics(&model, &hs, &recons)?;
                rows.push(Row {
                    method,
                    k,
                    seed,
                    r2_latent: Some(r2_l),
                    r2_output: r2_o,
                    residual_mean: Some(res),
                });
            }

            // Representer: output approximation only, no latent view.
            if n_classes.is_some() {
                let mut pairs = Vec::with_capacity(hs.len());
                for (x, h) in test_inputs.iter().zip(&hs) {
                    pairs.push(R2Pair {
                        truth: model.forward_head(h)?,
                        approx: representer_output(&model, &corpus, x, lambda)?,
                    });
                }
                rows.push(Row {
                    method: "representer",
                    k,
                    seed,
                    r2_latent: None,
                    r2_output: r2_score(&pairs)?,
                    residual_mean: None,
                });
            }
        }
    }

    let mut csv = String::from("method,K,seed,r2_latent,r2_output,residual_mean\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.method,
            row.k,
            row.seed,
            row.r2_latent.map(fmt17).unwrap_or_default(),
            fmt17(row.r2_output),
            row.residual_mean.map(fmt17).unwrap_or_default(),
        ));
    }
    write_file(&args.out.join("metrics.csv"), &csv)?;

    for (metric, file) in [("r2_latent", "r2_latent.svg"), ("r2_output", "r2_output.svg")] {
        let mut by_method: BTreeMap<&str, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
        for row in &rows {
            let value = match metric {
                "r2_latent" => row.r2_latent,
                _ => Some(row.r2_output),
            };
            if let Some(v) = value {
                by_method
                    .entry(row.method)
                    .or_default()
                    .entry(row.k)
                    .or_default()
                    .push(v);
            }
        }
        let xs: Vec<f64> = k_list.iter().map(|&k| k as f64).collect();
        let series: Vec<(String, Vec<f64>)> = by_method
            .iter()
            .map(|(method, per_k)| {
                let means: Vec<f64> = k_list
                    .iter()
                    .map(|k| {
                        let vs = &per_k[k];
                        vs.iter().sum::<f64>() / vs.len() as f64
                    })
                    .collect();
                (method.to_string(), means)
            })
            .collect();
        let mut doc = SvgDoc::new();
        doc.line_panel(&format!("{metric} vs K (mean over seeds)"), &xs, &series);
        write_file(&args.out.join(file), &doc.finish())?;
    }
    println!("wrote metrics for {} rows to {}", rows.len(), args.out.display());
    Ok(())
}
