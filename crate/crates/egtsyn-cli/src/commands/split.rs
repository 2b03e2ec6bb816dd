//! `egtsyn split`: build a cross-validation plan under one of the four
//! protocols, audit it, and write it as text.

use crate::commands::{build_plan, load_labeled, render_plan, split_seed, DataArgs};
use crate::config::ConfigMap;
use crate::manifest::RunManifest;
use crate::CliError;
use egtsyn::pipeline::Protocol;
use std::fs;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    data: DataArgs,
    /// Split protocol: kfold, leave_drug, leave_tissue, or
    /// leave_combination.
    #[arg(long, value_name = "NAME")]
    protocol: Option<Protocol>,
    /// Fold count for the kfold protocol.
    #[arg(long, value_name = "N")]
    k: Option<usize>,
    /// Master seed; the split itself draws from offset 1.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Directory for `plan.txt` and `rejects.txt`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

pub fn run(args: Args, cfg: &mut ConfigMap) -> Result<(), CliError> {
    let paths = args.data.resolve(cfg)?;
    let protocol = cfg.or_default(args.protocol, "protocol", Protocol::KFold)?;
    let k = cfg.or_default(args.k, "k", 5)?;
    let seed = cfg.or_default(args.seed, "seed", 0)?;
    let out: PathBuf = cfg.required(args.out, "out")?;

    let mut manifest = RunManifest::new("split", seed);
    manifest
        .flag("protocol", protocol)
        .flag("k", k)
        .flag("out", out.display());
    manifest.input("drugs", &paths.drugs)?;
    manifest.input("cells", &paths.cells)?;
    manifest.input("synergy", &paths.synergy)?;
    manifest.write_into(&out)?;

    let (bundle, records, summary) = load_labeled(&paths)?;
    fs::write(out.join("rejects.txt"), egtsyn::pipeline::render_rejects(&bundle.rejects))?;

    let plan = build_plan(protocol, &records, &bundle.cells, k, split_seed(seed))?;
    fs::write(out.join("plan.txt"), render_plan(&plan, &summary))?;

    println!(
        "protocol {}: {} folds over {} labeled records ({} excluded by the synergy band)",
        plan.protocol,
        plan.folds.len(),
        summary.positive + summary.negative,
        summary.excluded
    );
    Ok(())
}
