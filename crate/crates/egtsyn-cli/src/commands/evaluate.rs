//! `egtsyn evaluate`: score a trained checkpoint on the test records of one
//! fold, printing the metrics report and optionally writing it as text and
//! CSV.

use crate::commands::{build_plan, load_labeled, select_fold, split_seed, DataArgs};
use crate::config::ConfigMap;
use crate::manifest::RunManifest;
use crate::CliError;
use egtsyn::model::read_checkpoint;
use egtsyn::pipeline::{evaluate, render_rejects, Protocol};
use std::fs;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    data: DataArgs,
    /// Checkpoint written by `egtsyn train`.
    #[arg(long, value_name = "FILE")]
    ckpt: Option<PathBuf>,
    /// Split protocol: kfold, leave_drug, leave_tissue, or
    /// leave_combination.
    #[arg(long, value_name = "NAME")]
    protocol: Option<Protocol>,
    /// Fold count for the kfold protocol.
    #[arg(long, value_name = "N")]
    k: Option<usize>,
    /// Which fold's test records to score.
    #[arg(long, value_name = "N")]
    fold: Option<usize>,
    /// Master seed; must match the training run for the same split.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Directory for `manifest.txt`, `report.txt`, and `report.csv`;
    /// without it the manifest goes to stderr and the report to stdout
    /// only.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

pub fn run(args: Args, cfg: &mut ConfigMap) -> Result<(), CliError> {
    let paths = args.data.resolve(cfg)?;
    let ckpt: PathBuf = cfg.required(args.ckpt, "ckpt")?;
    let protocol = cfg.or_default(args.protocol, "protocol", Protocol::KFold)?;
    let k = cfg.or_default(args.k, "k", 5)?;
    let fold_idx = cfg.or_default(args.fold, "fold", 0)?;
    let seed = cfg.or_default(args.seed, "seed", 0)?;
    let out: Option<PathBuf> = match args.out {
        Some(p) => Some(p),
        None => cfg.get("out").map(PathBuf::from),
    };

    let mut manifest = RunManifest::new("evaluate", seed);
    manifest
        .flag("ckpt", ckpt.display())
        .flag("protocol", protocol)
        .flag("k", k)
        .flag("fold", fold_idx);
    manifest.input("drugs", &paths.drugs)?;
    manifest.input("cells", &paths.cells)?;
    manifest.input("synergy", &paths.synergy)?;
    manifest.input("checkpoint", &ckpt)?;
    match &out {
        Some(dir) => manifest.write_into(dir)?,
        None => manifest.emit_stderr(),
    }

    let loaded = read_checkpoint(&ckpt).map_err(|e| {
        CliError::Runtime(anyhow::anyhow!("cannot load checkpoint {}: {e}", ckpt.display()))
    })?;
    let (bundle, records, _summary) = load_labeled(&paths)?;
    let width = bundle
        .expression_width()
        .ok_or_else(|| CliError::Runtime(anyhow::anyhow!("cell table defines no cell lines")))?;
    let expected = loaded.model.config().cell_input_dim;
    if expected != width {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "checkpoint expects cell vectors of width {expected}, dataset has width {width}"
        )));
    }
    if let Some(dir) = &out {
        fs::write(dir.join("rejects.txt"), render_rejects(&bundle.rejects))?;
    }

    let plan = build_plan(protocol, &records, &bundle.cells, k, split_seed(seed))?;
    let fold = select_fold(&plan, fold_idx)?;
    let report = evaluate(&loaded.model, &bundle, &records, &fold.test)?;

    if let Some(dir) = &out {
        fs::write(dir.join("report.txt"), report.render_text())?;
        fs::write(dir.join("report.csv"), report.render_csv())?;
    }
    print!("{}", report.render_text());
    Ok(())
}
