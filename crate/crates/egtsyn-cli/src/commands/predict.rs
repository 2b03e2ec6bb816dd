//! `egtsyn predict`: score one drug pair (given directly as SMILES) against
//! one cell line from a cell table, using a trained checkpoint.

use crate::config::ConfigMap;
use crate::manifest::RunManifest;
use crate::CliError;
use egtsyn::model::read_checkpoint;
use egtsyn::molgraph::build_dual_graph;
use egtsyn::pipeline::load_cell_table;
use egtsyn::smiles;
use std::fs;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Checkpoint written by `egtsyn train`.
    #[arg(long, value_name = "FILE")]
    ckpt: Option<PathBuf>,
    /// First drug as a SMILES string.
    #[arg(long, value_name = "SMILES")]
    drug_a: Option<String>,
    /// Second drug as a SMILES string.
    #[arg(long, value_name = "SMILES")]
    drug_b: Option<String>,
    /// Cell line id to look up in the cell table.
    #[arg(long, value_name = "ID")]
    cell_id: Option<String>,
    /// Cell-line table: `cell_id,tissue,g1,g2,...`.
    #[arg(long, value_name = "FILE")]
    cells: Option<PathBuf>,
    /// Directory for `manifest.txt` and `prediction.txt`; without it the
    /// manifest goes to stderr.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

pub fn run(args: Args, cfg: &mut ConfigMap) -> Result<(), CliError> {
    let ckpt: PathBuf = cfg.required(args.ckpt, "ckpt")?;
    let drug_a: String = cfg.required(args.drug_a, "drug-a")?;
    let drug_b: String = cfg.required(args.drug_b, "drug-b")?;
    let cell_id: String = cfg.required(args.cell_id, "cell-id")?;
    let cells_path: PathBuf = cfg.required(args.cells, "cells")?;
    let out: Option<PathBuf> = match args.out {
        Some(p) => Some(p),
        None => cfg.get("out").map(PathBuf::from),
    };

    let mut manifest = RunManifest::new("predict", 0);
    manifest
        .flag("drug-a", &drug_a)
        .flag("drug-b", &drug_b)
        .flag("cell-id", &cell_id);
    manifest.input("checkpoint", &ckpt)?;
    manifest.input("cells", &cells_path)?;
    match &out {
        Some(dir) => manifest.write_into(dir)?,
        None => manifest.emit_stderr(),
    }

    let loaded = read_checkpoint(&ckpt).map_err(|e| {
        CliError::Runtime(anyhow::anyhow!("cannot load checkpoint {}: {e}", ckpt.display()))
    })?;
    let (cells, rejects) = load_cell_table(&cells_path)?;
    if !rejects.is_empty() {
        eprint!("{}", egtsyn::pipeline::render_rejects(&rejects));
    }
    let cell = cells
        .get(&cell_id)
        .ok_or_else(|| CliError::Runtime(anyhow::anyhow!("unknown cell line `{cell_id}`")))?;
    let expected = loaded.model.config().cell_input_dim;
    if expected != cell.expression.len() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "checkpoint expects cell vectors of width {expected}, table has width {}",
            cell.expression.len()
        )));
    }

    let graph_a = build_dual_graph(&smiles::parse(&drug_a)?, "drug_a")?;
    let graph_b = build_dual_graph(&smiles::parse(&drug_b)?, "drug_b")?;
    let probability = loaded.model.predict(&graph_a, &graph_b, &cell.expression)?;
    let label = u8::from(probability >= 0.5);

    let text = format!("probability {probability:.6}\nlabel {label}\n");
    if let Some(dir) = &out {
        fs::write(dir.join("prediction.txt"), &text)?;
    }
    print!("{text}");
    Ok(())
}
