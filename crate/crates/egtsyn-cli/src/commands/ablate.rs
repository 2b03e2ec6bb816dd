//! `egtsyn ablate`: train all four variants on the same k-fold plan and
//! tabulate mean±sd for the headline metrics, so the contribution of the
//! dual graph and the transformer encoder can be read off directly.

use crate::commands::{
    build_plan, load_labeled, manifest_model_flags, model_seed, render_plan, split_seed,
    train_seed, DataArgs, ModelArgs,
};
use crate::config::ConfigMap;
use crate::manifest::RunManifest;
use crate::CliError;
use egtsyn::metrics::{fold_stat, MetricsReport};
use egtsyn::model::{Model, ModelConfig, Variant};
use egtsyn::pipeline::{evaluate, render_rejects, train, Protocol, TrainSettings};
use egtsyn::tensor::AdamHyperParams;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    data: DataArgs,
    /// Fold count for the shared k-fold plan.
    #[arg(long, value_name = "N")]
    k: Option<usize>,
    /// Training epochs per variant and fold.
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    /// Mini-batch size.
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
    /// Adam learning rate.
    #[arg(long, value_name = "X")]
    lr: Option<f64>,
    /// L2 penalty scale delta.
    #[arg(long, value_name = "X")]
    delta: Option<f64>,
    /// Master seed shared by every variant, so all runs see identical
    /// folds, initial-weight draws, and batch orders.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[command(flatten)]
    model: ModelArgs,
    /// Directory for `manifest.txt`, `plan.txt`, `ablation.txt`,
    /// `folds.csv`, and `rejects.txt`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

const TABLE_METRICS: [&str; 5] = ["roc_auc", "pr_auc", "acc", "bacc", "kappa"];

fn table_values(report: &MetricsReport) -> [Option<f64>; 5] {
    [
        report.roc_auc,
        report.pr_auc,
        report.acc,
        report.bacc,
        report.kappa,
    ]
}

fn render_stat(values: &[Option<f64>]) -> String {
    match fold_stat(values) {
        None => "undefined".to_string(),
        Some(stat) => match stat.sd {
            Some(sd) => format!("{:.4}±{sd:.4}", stat.mean),
            None => format!("{:.4}±na", stat.mean),
        },
    }
}

pub fn run(args: Args, cfg: &mut ConfigMap) -> Result<(), CliError> {
    let paths = args.data.resolve(cfg)?;
    let k = cfg.or_default(args.k, "k", 5)?;
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

    let (bundle, records, summary) = load_labeled(&paths)?;
    let width = bundle
        .expression_width()
        .ok_or_else(|| CliError::Runtime(anyhow::anyhow!("cell table defines no cell lines")))?;
    let base = args
        .model
        .resolve(cfg, Variant::EGTSyn, model_seed(seed), width)?;

    let mut manifest = RunManifest::new("ablate", seed);
    manifest
        .flag("k", k)
        .flag("epochs", epochs)
        .flag("batch-size", batch_size)
        .flag("lr", lr)
        .flag("delta", delta);
    manifest_model_flags(&mut manifest, &base);
    manifest.flag("out", out.display());
    manifest.input("drugs", &paths.drugs)?;
    manifest.input("cells", &paths.cells)?;
    manifest.input("synergy", &paths.synergy)?;
    manifest.write_into(&out)?;
    fs::write(out.join("rejects.txt"), render_rejects(&bundle.rejects))?;

    let plan = build_plan(Protocol::KFold, &records, &bundle.cells, k, split_seed(seed))?;
    let plan_text = render_plan(&plan, &summary);
    fs::write(out.join("plan.txt"), &plan_text)?;
    let plan_digest = hex::encode(Sha256::digest(plan_text.as_bytes()));

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

    let mut folds_csv = String::from("variant,fold,roc_auc,pr_auc,acc,bacc,kappa\n");
    let mut table = format!("variant params {}\n", TABLE_METRICS.join(" "));
    for variant in Variant::ALL {
        let config = ModelConfig {
            variant,
            ..base.clone()
        };
        let params = Model::new(config.clone())?.parameter_count();
        let mut per_metric: [Vec<Option<f64>>; 5] = Default::default();
        for fold in &plan.folds {
            let mut model = Model::new(config.clone())?;
            train(&mut model, &bundle, &records, &fold.train, &[], &settings)?;
            let report = evaluate(&model, &bundle, &records, &fold.test)?;
            let values = table_values(&report);
            folds_csv.push_str(&format!("{variant},{}", fold.name));
            for (slot, value) in per_metric.iter_mut().zip(values) {
                slot.push(value);
                match value {
                    Some(v) => folds_csv.push_str(&format!(",{v}")),
                    None => folds_csv.push(','),
                }
            }
            folds_csv.push('\n');
            eprintln!("ablate: {variant} {} done", fold.name);
        }
        table.push_str(&format!("{variant} {params}"));
        for slot in &per_metric {
            table.push(' ');
            table.push_str(&render_stat(slot));
        }
        table.push('\n');
    }

    let mut ablation = String::new();
    ablation.push_str("ablation_version 1\n");
    ablation.push_str("protocol kfold\n");
    ablation.push_str(&format!("folds {}\n", plan.folds.len()));
    ablation.push_str(&format!("plan sha256 {plan_digest}\n"));
    ablation.push_str(&table);
    fs::write(out.join("ablation.txt"), &ablation)?;
    fs::write(out.join("folds.csv"), &folds_csv)?;

    print!("{table}");
    println!("wrote ablation.txt and folds.csv to {}", out.display());
    Ok(())
}
