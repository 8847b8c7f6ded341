//! `simplex train`: fit an MLP split model and write checkpoint.json
//! plus training_log.csv (epoch, loss, metric).

use simplex_core::{save_checkpoint, train_logged, LossKind, SplitModel, TrainConfig};

use crate::commands::{resolve_seed, write_file};
use crate::config::RunConfig;
use crate::data::{fmt17, load_dataset};
use crate::error::{CliError, CliResult};
use crate::CommonArgs;

const ALLOWED: &[&str] = &[
    "data",
    "data_labels",
    "n_classes",
    "hidden",
    "d_latent",
    "epochs",
    "batch_size",
    "learning_rate",
    "weight_decay",
    "loss",
    "seed",
];

pub fn run(args: &CommonArgs) -> CliResult<()> {
    let config = RunConfig::load(&args.config, ALLOWED)?;
    let seed = resolve_seed(&config, args.seed)?;
    let n_classes = config.parse_opt::<usize>("n_classes")?;
    let data_path = config.path_req("data")?;
    let labels_path = match config.str_opt("data_labels") {
        Some(_) => Some(config.path_req("data_labels")?),
        None => None,
    };
    let data = load_dataset(&data_path, labels_path.as_deref(), n_classes)?;
    if data.is_empty() {
        return Err(CliError::Data("training dataset is empty".into()));
    }
    let d_x = data[0].0.len();
    let d_y = n_classes.unwrap_or(1);
    let hidden = config.list_opt::<usize>("hidden")?.unwrap_or(vec![16]);
    let d_latent = config.parse_or("d_latent", 8usize)?;
    let loss_kind = match config.str_opt("loss") {
        Some("cross_entropy") => LossKind::CrossEntropy,
        Some("mse") => LossKind::Mse,
        Some(other) => {
            return Err(CliError::Usage(format!(
                "config `loss`: unknown value `{other}` (cross_entropy | mse)"
            )))
        }
        None => {
            if n_classes.is_some() {
                LossKind::CrossEntropy
            } else {
                LossKind::Mse
            }
        }
    };
    let train_cfg = TrainConfig {
        epochs: config.parse_or("epochs", 100usize)?,
        batch_size: config.parse_or("batch_size", 32usize)?,
        learning_rate: config.parse_or("learning_rate", 1e-3)?,
        weight_decay: config.parse_or("weight_decay", 0.0)?,
        loss_kind,
        seed,
        ..TrainConfig::default()
    };

    println!(
        "training {d_x}->{hidden:?}->{d_latent}->{d_y} on {} examples, {} epochs",
        data.len(),
        train_cfg.epochs
    );
    let model = SplitModel::new_mlp(d_x, &hidden, d_latent, d_y, seed);
    let (trained, log) = train_logged(&model, &data, &train_cfg)?;

    let ckpt_path = args.out.join("checkpoint.json");
    save_checkpoint(&ckpt_path, &trained)?;

    let mut csv = String::from("epoch,loss,metric\n");
    for stats in &log {
        csv.push_str(&format!(
            "{},{},{}\n",
            stats.epoch,
            fmt17(stats.loss),
            fmt17(stats.metric)
        ));
    }
    write_file(&args.out.join("training_log.csv"), &csv)?;

    if let Some(last) = log.last() {
        println!(
            "final epoch {}: loss {:.6}, metric {:.6}",
            last.epoch, last.loss, last.metric
        );
    }
    println!("wrote {}", ckpt_path.display());
    Ok(())
}
