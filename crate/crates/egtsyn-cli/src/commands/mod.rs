//! The seven subcommands plus helpers they share: dataset loading,
//! split-plan construction, seed derivation, and flag resolution.

pub mod ablate;
pub mod evaluate;
pub mod featurize;
pub mod gradcheck;
pub mod predict;
pub mod split;
pub mod train;

use crate::config::ConfigMap;
use crate::CliError;
use egtsyn::model::{ModelConfig, Pooling, Variant};
use egtsyn::pipeline::{
    apply_labels, audit_split, kfold_split, leave_combination_out_split, leave_drug_out_split,
    leave_tissue_out_split, load_bundle, render_rejects, CellLine, DatasetBundle, LabelSummary,
    Protocol, SplitPlan, SynergyRecord,
};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// One `--seed` drives everything; each stage draws from its own offset so
/// changing, say, the number of epochs never perturbs the split.
pub fn model_seed(seed: u64) -> u64 {
    seed
}

pub fn split_seed(seed: u64) -> u64 {
    seed.wrapping_add(1)
}

pub fn train_seed(seed: u64) -> u64 {
    seed.wrapping_add(2)
}

/// Case-insensitive variant lookup for flag values.
pub fn parse_variant_ci(s: &str) -> Result<Variant, String> {
    Variant::ALL
        .into_iter()
        .find(|v| v.name().eq_ignore_ascii_case(s))
        .ok_or_else(|| format!("unknown variant `{s}`, expected EGTSyn, GTSyn, EGSyn, or GSyn"))
}

/// Resolves `--variant` from the explicit flag or the config file.
pub fn resolve_variant(explicit: Option<Variant>, cfg: &mut ConfigMap) -> Result<Variant, CliError> {
    if let Some(v) = explicit {
        cfg.get("variant");
        return Ok(v);
    }
    match cfg.get("variant") {
        Some(raw) => parse_variant_ci(raw).map_err(CliError::Usage),
        None => Err(CliError::Usage("missing required flag --variant".to_string())),
    }
}

/// `rows,cols` pair flag value, e.g. `--cell-hidden 2048,512`.
#[derive(Debug, Clone, Copy)]
pub struct Pair(pub usize, pub usize);

impl FromStr for Pair {
    type Err = String;

    fn from_str(s: &str) -> Result<Pair, String> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("expected two comma-separated sizes, got `{s}`"))?;
        let parse = |part: &str| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad size `{part}`: {e}"))
        };
        Ok(Pair(parse(a)?, parse(b)?))
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0, self.1)
    }
}

/// The three dataset tables every data-driven subcommand reads.
#[derive(clap::Args)]
pub struct DataArgs {
    /// Drug table: `drug_id,smiles`.
    #[arg(long, value_name = "FILE")]
    pub drugs: Option<PathBuf>,
    /// Cell-line table: `cell_id,tissue,g1,g2,...`.
    #[arg(long, value_name = "FILE")]
    pub cells: Option<PathBuf>,
    /// Synergy table: `drug_a,drug_b,cell_line,loewe`.
    #[arg(long, value_name = "FILE")]
    pub synergy: Option<PathBuf>,
}

pub struct DataPaths {
    pub drugs: PathBuf,
    pub cells: PathBuf,
    pub synergy: PathBuf,
}

impl DataArgs {
    pub fn resolve(self, cfg: &mut ConfigMap) -> Result<DataPaths, CliError> {
        Ok(DataPaths {
            drugs: cfg.required(self.drugs, "drugs")?,
            cells: cfg.required(self.cells, "cells")?,
            synergy: cfg.required(self.synergy, "synergy")?,
        })
    }
}

/// Loads the bundle, reports row rejects on stderr, and applies the
/// synergy-score labeling rule. Returns the labeled records that all split
/// indices refer to.
pub fn load_labeled(
    paths: &DataPaths,
) -> Result<(DatasetBundle, Vec<SynergyRecord>, LabelSummary), CliError> {
    let bundle = load_bundle(&paths.drugs, &paths.cells, &paths.synergy)?;
    if !bundle.rejects.is_empty() {
        eprint!("{}", render_rejects(&bundle.rejects));
    }
    let (records, summary) = apply_labels(&bundle.records)?;
    Ok((bundle, records, summary))
}

/// Builds and audits a split plan under the chosen protocol. Tissue folds
/// skipped for lack of records are reported on stderr.
pub fn build_plan(
    protocol: Protocol,
    records: &[SynergyRecord],
    cells: &BTreeMap<String, CellLine>,
    k: usize,
    seed: u64,
) -> Result<SplitPlan, CliError> {
    let plan = match protocol {
        Protocol::KFold => kfold_split(records, k, seed)?,
        Protocol::LeaveDrug => leave_drug_out_split(records, seed)?,
        Protocol::LeaveTissue => {
            let (plan, warnings) = leave_tissue_out_split(records, cells)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            plan
        }
        Protocol::LeaveCombination => leave_combination_out_split(records, seed)?,
    };
    audit_split(&plan, records, cells)?;
    Ok(plan)
}

/// Picks one fold out of a plan, rejecting out-of-range indices as usage
/// errors.
pub fn select_fold(plan: &SplitPlan, fold: usize) -> Result<&egtsyn::pipeline::Fold, CliError> {
    plan.folds.get(fold).ok_or_else(|| {
        CliError::Usage(format!(
            "--fold {fold} out of range: the {} plan has {} folds",
            plan.protocol,
            plan.folds.len()
        ))
    })
}

/// Renders a split plan as line-oriented text.
pub fn render_plan(plan: &SplitPlan, summary: &LabelSummary) -> String {
    let mut out = String::new();
    out.push_str("plan_version 1\n");
    out.push_str(&format!("protocol {}\n", plan.protocol));
    out.push_str(&format!("folds {}\n", plan.folds.len()));
    out.push_str(&format!(
        "labeled {}\n",
        summary.positive + summary.negative
    ));
    out.push_str(&format!("excluded {}\n", summary.excluded));
    for fold in &plan.folds {
        out.push_str(&format!("fold {}\n", fold.name));
        out.push_str("holdout");
        for id in &fold.holdout {
            out.push(' ');
            out.push_str(id);
        }
        out.push('\n');
        for (label, indices) in [("train", &fold.train), ("test", &fold.test)] {
            out.push_str(label);
            for i in indices {
                out.push_str(&format!(" {i}"));
            }
            out.push('\n');
        }
    }
    out
}

/// Architecture overrides shared by `train` and `ablate`. Every width
/// defaults to the stock configuration; tests and small datasets shrink
/// them through these flags or a config file.
#[derive(clap::Args)]
pub struct ModelArgs {
    /// Number of graph-convolution layers.
    #[arg(long, value_name = "N")]
    pub gcn_layers: Option<usize>,
    /// Hidden width between graph-convolution layers.
    #[arg(long, value_name = "N")]
    pub gcn_hidden: Option<usize>,
    /// Per-node embedding width leaving the convolution stack.
    #[arg(long, value_name = "N")]
    pub embed_dim: Option<usize>,
    /// Attention heads in the transformer encoder.
    #[arg(long, value_name = "N")]
    pub heads: Option<usize>,
    /// Feed-forward width inside the transformer encoder.
    #[arg(long, value_name = "N")]
    pub ffn_hidden: Option<usize>,
    /// Cell-line reduction widths, e.g. `2048,512`.
    #[arg(long, value_name = "A,B")]
    pub cell_hidden: Option<Pair>,
    /// Cell-line embedding width.
    #[arg(long, value_name = "N")]
    pub cell_embed: Option<usize>,
    /// Classification-head widths, e.g. `1024,256`.
    #[arg(long, value_name = "A,B")]
    pub head_hidden: Option<Pair>,
    /// Dropout rate in [0, 1).
    #[arg(long, value_name = "P")]
    pub dropout: Option<f64>,
    /// Graph pooling: max, sum, or mean.
    #[arg(long, value_name = "KIND")]
    pub pooling: Option<Pooling>,
}

impl ModelArgs {
    /// Resolves flags against the config file and stock defaults, producing
    /// a full model configuration for the given variant, seed, and
    /// expression width.
    pub fn resolve(
        self,
        cfg: &mut ConfigMap,
        variant: Variant,
        seed: u64,
        cell_input_dim: usize,
    ) -> Result<ModelConfig, CliError> {
        let stock = ModelConfig::new(variant, seed);
        let cell_hidden = cfg.or_default(
            self.cell_hidden,
            "cell-hidden",
            Pair(stock.cell_hidden.0, stock.cell_hidden.1),
        )?;
        let head_hidden = cfg.or_default(
            self.head_hidden,
            "head-hidden",
            Pair(stock.head_hidden.0, stock.head_hidden.1),
        )?;
        Ok(ModelConfig {
            variant,
            gcn_layers: cfg.or_default(self.gcn_layers, "gcn-layers", stock.gcn_layers)?,
            gcn_hidden: cfg.or_default(self.gcn_hidden, "gcn-hidden", stock.gcn_hidden)?,
            graph_embed_dim: cfg.or_default(self.embed_dim, "embed-dim", stock.graph_embed_dim)?,
            attention_heads: cfg.or_default(self.heads, "heads", stock.attention_heads)?,
            ffn_hidden: cfg.or_default(self.ffn_hidden, "ffn-hidden", stock.ffn_hidden)?,
            cell_input_dim,
            cell_hidden: (cell_hidden.0, cell_hidden.1),
            cell_embed_dim: cfg.or_default(self.cell_embed, "cell-embed", stock.cell_embed_dim)?,
            head_hidden: (head_hidden.0, head_hidden.1),
            dropout_rate: cfg.or_default(self.dropout, "dropout", stock.dropout_rate)?,
            pooling: cfg.or_default(self.pooling, "pooling", stock.pooling)?,
            seed,
        })
    }
}

/// Records the architecture a run resolved to, so manifests pin the exact
/// model shape.
pub fn manifest_model_flags(m: &mut crate::manifest::RunManifest, config: &ModelConfig) {
    m.flag("gcn-layers", config.gcn_layers)
        .flag("gcn-hidden", config.gcn_hidden)
        .flag("embed-dim", config.graph_embed_dim)
        .flag("heads", config.attention_heads)
        .flag("ffn-hidden", config.ffn_hidden)
        .flag("cell-hidden", Pair(config.cell_hidden.0, config.cell_hidden.1))
        .flag("cell-embed", config.cell_embed_dim)
        .flag("head-hidden", Pair(config.head_hidden.0, config.head_hidden.1))
        .flag("dropout", config.dropout_rate)
        .flag("pooling", config.pooling);
}

/// Maps a drug id onto a safe file stem for graph dumps.
pub fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
