//! `egtsyn train`: fit one variant on one fold of a split plan, writing the
//! checkpoint, per-epoch loss history, and row rejects next to the
//! manifest.

use crate::commands::{
    build_plan, load_labeled, manifest_model_flags, model_seed, resolve_variant, select_fold,
    split_seed, train_seed, DataArgs, ModelArgs,
};
use crate::config::ConfigMap;
use crate::manifest::RunManifest;
use crate::CliError;
use egtsyn::model::{Model, Variant};
use egtsyn::pipeline::{render_history, render_rejects, train, Protocol, TrainSettings};
use egtsyn::tensor::AdamHyperParams;
use std::fs;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    data: DataArgs,
    /// Model variant: EGTSyn, GTSyn, EGSyn, or GSyn.
    #[arg(long, value_name = "NAME", value_parser = crate::commands::parse_variant_ci)]
    variant: Option<Variant>,
    /// Split protocol: kfold, leave_drug, leave_tissue, or
    /// leave_combination.
    #[arg(long, value_name = "NAME")]
    protocol: Option<Protocol>,
    /// Fold count for the kfold protocol.
    #[arg(long, value_name = "N")]
    k: Option<usize>,
    /// Which fold of the plan to train on.
    #[arg(long, value_name = "N")]
    fold: Option<usize>,
    /// Training epochs.
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    /// Mini-batch size.
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
    /// Adam learning rate.
    #[arg(long, value_name = "X")]
    lr: Option<f64>,
    /// L2 penalty scale delta; the loss adds `(2 / delta) * sum(theta^2)`.
    #[arg(long, value_name = "X")]
    delta: Option<f64>,
    /// Master seed: weights draw from offset 0, the split from offset 1,
    /// batch shuffling and dropout from offset 2.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[command(flatten)]
    model: ModelArgs,
    /// Directory for `manifest.txt`, `checkpoint.txt`, `history.csv`, and
    /// `rejects.txt`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

pub fn run(args: Args, cfg: &mut ConfigMap) -> Result<(), CliError> {
    let paths = args.data.resolve(cfg)?;
    let variant = resolve_variant(args.variant, cfg)?;
    let protocol = cfg.or_default(args.protocol, "protocol", Protocol::KFold)?;
    let k = cfg.or_default(args.k, "k", 5)?;
    let fold_idx = cfg.or_default(args.fold, "fold", 0)?;
    let epochs = cfg.or_default(args.epochs, "epochs", 300)?;
    let batch_size = cfg.or_default(args.batch_size, "batch-size", 128)?;
    let lr = cfg.or_default(args.lr, "lr", 1e-4)?;
    let delta = cfg.or_default(args.delta, "delta", 1e4)?;
    let seed = cfg.or_default(args.seed, "seed", 0)?;
    let out: PathBuf = cfg.required(args.out, "out")?;
    if !lr.is_finite() || lr <= 0.0 {
        return Err(CliError::Usage(format!(
            "--lr must be a positive finite number, got {lr}"
        )));
    }
    if !(delta > 0.0) {
        return Err(CliError::Usage(format!("--delta must be positive, got {delta}")));
    }

    let (bundle, records, _summary) = load_labeled(&paths)?;
    let width = bundle
        .expression_width()
        .ok_or_else(|| CliError::Runtime(anyhow::anyhow!("cell table defines no cell lines")))?;
    let config = args.model.resolve(cfg, variant, model_seed(seed), width)?;

    let mut manifest = RunManifest::new("train", seed);
    manifest
        .flag("variant", variant)
        .flag("protocol", protocol)
        .flag("k", k)
        .flag("fold", fold_idx)
        .flag("epochs", epochs)
        .flag("batch-size", batch_size)
        .flag("lr", lr)
        .flag("delta", delta);
    manifest_model_flags(&mut manifest, &config);
    manifest.flag("out", out.display());
    manifest.input("drugs", &paths.drugs)?;
    manifest.input("cells", &paths.cells)?;
    manifest.input("synergy", &paths.synergy)?;
    manifest.write_into(&out)?;
    fs::write(out.join("rejects.txt"), render_rejects(&bundle.rejects))?;

    let plan = build_plan(protocol, &records, &bundle.cells, k, split_seed(seed))?;
    let fold = select_fold(&plan, fold_idx)?;

    let settings = TrainSettings {
        epochs,
        batch_size,
        hp: AdamHyperParams {
            lr,
            ..AdamHyperParams::default()
        },
        l2_delta: Some(delta),
        seed: train_seed(seed),
    };
    let mut model = Model::new(config)?;
    let result = train(&mut model, &bundle, &records, &fold.train, &fold.test, &settings)?;

    egtsyn::model::write_checkpoint(&out.join("checkpoint.txt"), &model, epochs, result.final_loss)?;
    fs::write(out.join("history.csv"), render_history(&result.history))?;

    let last = result.history.last().expect("at least one epoch");
    match last.val_loss {
        Some(v) => println!(
            "trained {variant} on {}: train loss {:.6}, val loss {v:.6} after {epochs} epochs",
            fold.name, last.train_loss
        ),
        None => println!(
            "trained {variant} on {}: train loss {:.6} after {epochs} epochs",
            fold.name, last.train_loss
        ),
    }
    println!("wrote checkpoint.txt and history.csv to {}", out.display());
    Ok(())
}
