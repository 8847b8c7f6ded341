//! `simplex detect`: residual-based outlier detection. The test set is
//! the concatenation of an in-distribution file and a shifted file;
//! curves are emitted for the decomposition residual, a KNN residual,
//! the random baseline (mean and std over seeded shuffles) and the
//! ideal inspector.

use simplex_core::{
    detection_curve, fit_decomposition_batch, knn_distance, load_checkpoint, reconstruct_latent,
    DetectionCurve,
};

use crate::commands::{decomposition_config, load_corpus, resolve_seed, write_file};
use crate::config::RunConfig;
use crate::data::{features, fmt17, load_dataset};
use crate::error::{CliError, CliResult};
use crate::svg::SvgDoc;
use crate::CommonArgs;

const ALLOWED: &[&str] = &[
    "checkpoint",
    "corpus",
    "corpus_labels",
    "test_in",
    "test_out",
    "n_classes",
    "steps",
    "knn_k",
    "random_trials",
    "seed",
];

pub fn run(args: &CommonArgs) -> CliResult<()> {
    let config = RunConfig::load(&args.config, ALLOWED)?;
    let seed = resolve_seed(&config, args.seed)?;
    let model = load_checkpoint(&config.path_req("checkpoint")?)?;
    let n_classes = config.parse_opt::<usize>("n_classes")?;
    let (corpus, _) = load_corpus(&config, &model, "corpus", n_classes)?;
    let test_in = load_dataset(&config.path_req("test_in")?, None, n_classes)?;
    let test_out = load_dataset(&config.path_req("test_out")?, None, n_classes)?;
    if test_out.is_empty() {
        return Err(CliError::Data("shifted test set is empty".into()));
    }
    let dec_cfg = decomposition_config(&config)?;
    let knn_k = config.parse_or("knn_k", 3usize)?.min(corpus.len());
    let trials = config.parse_or("random_trials", 100usize)?;

    let mut inputs = features(&test_in);
    let mut flags = vec![false; inputs.len()];
    inputs.extend(features(&test_out));
    flags.extend(std::iter::repeat(true).take(test_out.len()));
    let total = inputs.len();
    let outliers = test_out.len();
    println!("scoring {total} test examples ({outliers} shifted) against corpus of {}", corpus.len());

    let hs: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| model.forward_latent(x))
        .collect::<Result<_, _>>()?;

    let decs = fit_decomposition_batch(&hs, &corpus, &dec_cfg)?;
    let simplex_scores: Vec<f64> = decs.iter().map(|d| d.residual).collect();
    let simplex_curve = detection_curve(&simplex_scores, &flags)?;

    let knn_scores: Vec<f64> = hs
        .iter()
        .map(|h| {
            let w = knn_distance(h, &corpus, knn_k)?;
            let recon = reconstruct_latent(&corpus, &w.weights)?;
            let diff: Vec<f64> = h.iter().zip(&recon).map(|(a, b)| a - b).collect();
            Ok(simplex_core::l2_norm(&diff))
        })
        .collect::<Result<_, simplex_core::Error>>()?;
    let knn_curve = detection_curve(&knn_scores, &flags)?;

    let (random_mean, random_std) = DetectionCurve::random_reference(total, &flags, trials, seed);
    let ideal = DetectionCurve::ideal(total, outliers);

    let mut csv = String::from("method,n,value\n");
    let push_counts = |csv: &mut String, name: &str, counts: &[usize]| {
        for (i, &u) in counts.iter().enumerate() {
            csv.push_str(&format!("{name},{},{u}\n", i + 1));
        }
    };
    push_counts(&mut csv, "simplex", &simplex_curve.counts);
    push_counts(&mut csv, "knn", &knn_curve.counts);
    push_counts(&mut csv, "ideal", &ideal.counts);
    for (i, (m, s)) in random_mean.iter().zip(&random_std).enumerate() {
        csv.push_str(&format!("random_mean,{},{}\n", i + 1, fmt17(*m)));
        csv.push_str(&format!("random_std,{},{}\n", i + 1, fmt17(*s)));
    }
    write_file(&args.out.join("detection.csv"), &csv)?;

    let xs: Vec<f64> = (1..=total).map(|n| n as f64).collect();
    let series = vec![
        (
            "simplex".to_string(),
            simplex_curve.counts.iter().map(|&u| u as f64).collect(),
        ),
        (
            "knn".to_string(),
            knn_curve.counts.iter().map(|&u| u as f64).collect(),
        ),
        (
            "ideal".to_string(),
            ideal.counts.iter().map(|&u| u as f64).collect(),
        ),
        ("random_mean".to_string(), random_mean),
    ];
    let mut doc = SvgDoc::new();
    doc.line_panel("outliers found vs examples inspected", &xs, &series);
    write_file(&args.out.join("detection.svg"), &doc.finish())?;
    println!("wrote detection curves to {}", args.out.display());
    Ok(())
}
