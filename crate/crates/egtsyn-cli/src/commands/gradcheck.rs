//! `egtsyn gradcheck`: verify analytic gradients against central finite
//! differences on a small synthetic batch, variant by variant.
//!
//! Weights are jittered away from their symmetric initialization before
//! checking, so ReLU kinks do not sit exactly at zero where one-sided
//! activation flips would poison the finite differences. `--corrupt` runs
//! the negative control instead: one parameter's analytic gradient is
//! deliberately scaled, and the command fails unless the checker catches
//! exactly that parameter.

use crate::commands::parse_variant_ci;
use crate::config::ConfigMap;
use crate::manifest::RunManifest;
use crate::CliError;
use egtsyn::model::{Model, ModelConfig, PairItem, Pooling, Variant};
use egtsyn::molgraph::{build_dual_graph, DualGraph};
use egtsyn::smiles;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::path::PathBuf;

const MOLECULES: [&str; 4] = ["CCO", "c1ccccc1", "CC(=O)O", "CCN"];
const CELL_WIDTH: usize = 5;
const CORRUPT_PARAM: &str = "head.out.w";
const JITTER: f64 = 1e-2;

#[derive(clap::Args)]
pub struct Args {
    /// Variant to check; all four when omitted.
    #[arg(long, value_name = "NAME", value_parser = parse_variant_ci)]
    variant: Option<Variant>,
    /// Seed for the synthetic batch and the weight jitter.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Maximum tolerated relative error between analytic and
    /// finite-difference gradients.
    #[arg(long, value_name = "X")]
    tolerance: Option<f64>,
    /// Run the negative control: corrupt one analytic gradient and demand
    /// the checker reports it.
    #[arg(long)]
    corrupt: bool,
    /// Directory for `manifest.txt` and `report.txt`; without it the
    /// manifest goes to stderr.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

/// A model small enough that probing every parameter twice stays fast.
fn micro_config(variant: Variant, seed: u64) -> ModelConfig {
    ModelConfig {
        variant,
        gcn_layers: 2,
        gcn_hidden: 7,
        graph_embed_dim: 6,
        attention_heads: 2,
        ffn_hidden: 9,
        cell_input_dim: CELL_WIDTH,
        cell_hidden: (8, 6),
        cell_embed_dim: 5,
        head_hidden: (9, 5),
        dropout_rate: 0.2,
        pooling: Pooling::Max,
        seed,
    }
}

fn synth_graphs() -> Result<Vec<DualGraph>, CliError> {
    MOLECULES
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let mol = smiles::parse(text)?;
            Ok(build_dual_graph(&mol, &format!("synthetic{i}"))?)
        })
        .collect()
}

pub fn run(args: Args, cfg: &mut ConfigMap) -> Result<(), CliError> {
    let seed = cfg.or_default(args.seed, "seed", 0)?;
    let tolerance = cfg.or_default(args.tolerance, "tolerance", 1e-4)?;
    let out: Option<PathBuf> = match args.out {
        Some(p) => Some(p),
        None => cfg.get("out").map(PathBuf::from),
    };
    if !(tolerance > 0.0) {
        return Err(CliError::Usage(format!(
            "--tolerance must be positive, got {tolerance}"
        )));
    }
    let variants: Vec<Variant> = match args.variant {
        Some(v) => vec![v],
        None => Variant::ALL.to_vec(),
    };

    let mut manifest = RunManifest::new("gradcheck", seed);
    manifest
        .flag(
            "variant",
            variants
                .iter()
                .map(|v| v.name())
                .collect::<Vec<_>>()
                .join(","),
        )
        .flag("tolerance", tolerance)
        .flag("corrupt", args.corrupt);
    match &out {
        Some(dir) => manifest.write_into(dir)?,
        None => manifest.emit_stderr(),
    }

    let graphs = synth_graphs()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cell_a: Vec<f64> = (0..CELL_WIDTH).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cell_b: Vec<f64> = (0..CELL_WIDTH).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let items = [
        PairItem {
            drug_a: &graphs[0],
            drug_b: &graphs[1],
            cell: &cell_a,
            label: 1.0,
        },
        PairItem {
            drug_a: &graphs[2],
            drug_b: &graphs[3],
            cell: &cell_b,
            label: 0.0,
        },
    ];

    let mut text = format!("tolerance {tolerance}\n");
    let mut all_good = true;
    for &variant in &variants {
        let mut model = Model::new(micro_config(variant, seed))?;
        let mut jitter_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        model.jitter_params(JITTER, &mut jitter_rng);
        if args.corrupt {
            let report = model.check_gradients_negative_control(
                &items,
                Some(1e4),
                tolerance,
                CORRUPT_PARAM,
                1.5,
            )?;
            let caught = !report.passed()
                && report.worst().map(|w| w.name.as_str()) == Some(CORRUPT_PARAM);
            all_good &= caught;
            let worst = report.worst().expect("models have parameters");
            text.push_str(&format!(
                "variant {variant} negative_control {CORRUPT_PARAM} rel_err {:.3e} {}\n",
                worst.max_rel_err,
                if caught { "detected" } else { "MISSED" }
            ));
        } else {
            let report = model.check_gradients(&items, Some(1e4), tolerance)?;
            let worst = report.worst().expect("models have parameters");
            all_good &= report.passed();
            text.push_str(&format!(
                "variant {variant} tensors {} worst {}[{}] rel_err {:.3e} {}\n",
                report.entries.len(),
                worst.name,
                worst.worst_index,
                worst.max_rel_err,
                if report.passed() { "pass" } else { "FAIL" }
            ));
        }
    }

    if let Some(dir) = &out {
        fs::write(dir.join("report.txt"), &text)?;
    }
    print!("{text}");
    if !all_good {
        let what = if args.corrupt {
            "negative control did not flag the corrupted parameter"
        } else {
            "gradient check failed"
        };
        return Err(CliError::Runtime(anyhow::anyhow!("{what}; see report above")));
    }
    Ok(())
}
