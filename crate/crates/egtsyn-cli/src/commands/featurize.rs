//! `egtsyn featurize`: parse a drug table and dump every drug's atom graph
//! and atom-bond dual graph as plain text, plus a per-drug size summary.

use crate::commands::sanitize;
use crate::config::ConfigMap;
use crate::manifest::RunManifest;
use crate::CliError;
use egtsyn::molgraph::{build_dual_graph, render_dump};
use egtsyn::pipeline::{load_drug_table, render_rejects};
use egtsyn::smiles;
use std::fs;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Drug table: `drug_id,smiles`.
    #[arg(long, value_name = "FILE")]
    drugs: Option<PathBuf>,
    /// Directory for `<drug_id>.graph.txt` dumps, `summary.csv`, and
    /// `rejects.txt`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

pub fn run(args: Args, cfg: &mut ConfigMap) -> Result<(), CliError> {
    let drugs: PathBuf = cfg.required(args.drugs, "drugs")?;
    let out: PathBuf = cfg.required(args.out, "out")?;

    let mut manifest = RunManifest::new("featurize", 0);
    manifest.flag("drugs", drugs.display()).flag("out", out.display());
    manifest.input("drugs", &drugs)?;
    manifest.write_into(&out)?;

    let (table, rejects) = load_drug_table(&drugs)?;
    if !rejects.is_empty() {
        eprint!("{}", render_rejects(&rejects));
    }
    fs::write(out.join("rejects.txt"), render_rejects(&rejects))?;

    let mut summary = String::from("drug_id,atoms,bonds,dual_nodes\n");
    for (id, smiles_text) in &table {
        let mol = smiles::parse(smiles_text)?;
        let dual = build_dual_graph(&mol, id)?;
        let atoms = dual.atom_graph.node_count();
        let dual_nodes = dual.atom_bond_graph.node_count();
        summary.push_str(&format!("{id},{atoms},{},{dual_nodes}\n", dual_nodes - atoms));
        let path = out.join(format!("{}.graph.txt", sanitize(id)));
        fs::write(path, render_dump(&dual))?;
    }
    fs::write(out.join("summary.csv"), &summary)?;

    println!("featurized {} drugs into {}", table.len(), out.display());
    if !rejects.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "{} drug rows rejected; see {}",
            rejects.len(),
            out.join("rejects.txt").display()
        )));
    }
    Ok(())
}
