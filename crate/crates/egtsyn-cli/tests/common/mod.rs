//! Helpers shared by the CLI integration tests: a toy dataset small enough
//! to train in milliseconds, architecture flags that shrink the model to
//! match, and a runner that captures exit codes and output.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const DRUGS_CSV: &str = "\
drug_id,smiles
ASPIRIN,CC(=O)Oc1ccccc1C(=O)O
CAFFEINE,Cn1cnc2c1c(=O)n(C)c(=O)n2C
ETHANOL,CCO
IBUPROFEN,CC(C)Cc1ccc(cc1)C(C)C(=O)O
PARACETAMOL,CC(=O)Nc1ccc(O)cc1
PYRIDINE,c1ccncc1
";

pub const CELLS_CSV: &str = "\
cell_id,tissue,g1,g2,g3,g4
A549,lung,-0.4,0.8,1.1,-0.6
MCF7,breast,0.5,-1.2,0.3,2.0
T47D,breast,1.5,0.2,-0.9,0.4
";

pub const SYNERGY_CSV: &str = "\
drug_a,drug_b,cell_line,loewe
ASPIRIN,CAFFEINE,MCF7,25.3
ASPIRIN,ETHANOL,A549,-4.1
CAFFEINE,PARACETAMOL,MCF7,18.0
IBUPROFEN,ETHANOL,T47D,-12.5
ASPIRIN,IBUPROFEN,A549,31.2
PARACETAMOL,ETHANOL,MCF7,-7.7
CAFFEINE,IBUPROFEN,T47D,14.9
ASPIRIN,PARACETAMOL,T47D,-2.2
PYRIDINE,ETHANOL,A549,22.8
PYRIDINE,CAFFEINE,MCF7,-9.3
ASPIRIN,PYRIDINE,T47D,16.4
IBUPROFEN,PARACETAMOL,A549,-15.0
CAFFEINE,ETHANOL,T47D,5.0
";

pub struct ToyData {
    pub drugs: PathBuf,
    pub cells: PathBuf,
    pub synergy: PathBuf,
}

/// Writes the three toy tables into `dir`.
pub fn write_toy_bundle(dir: &Path) -> ToyData {
    let drugs = dir.join("drugs.csv");
    let cells = dir.join("cells.csv");
    let synergy = dir.join("synergy.csv");
    std::fs::write(&drugs, DRUGS_CSV).unwrap();
    std::fs::write(&cells, CELLS_CSV).unwrap();
    std::fs::write(&synergy, SYNERGY_CSV).unwrap();
    ToyData {
        drugs,
        cells,
        synergy,
    }
}

/// Flags shrinking every width so toy runs finish in milliseconds.
pub const TINY_MODEL_FLAGS: [&str; 14] = [
    "--gcn-hidden",
    "8",
    "--embed-dim",
    "6",
    "--heads",
    "2",
    "--ffn-hidden",
    "8",
    "--cell-hidden",
    "8,6",
    "--cell-embed",
    "5",
    "--head-hidden",
    "10,6",
];

/// A `Command` for the compiled `egtsyn` binary.
pub fn egtsyn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_egtsyn"))
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the command to completion and decodes its streams.
pub fn run(cmd: &mut Command) -> Run {
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().expect("spawn egtsyn");
    Run {
        code: status.code().expect("no exit code (killed by signal)"),
        stdout: String::from_utf8(stdout).expect("stdout is UTF-8"),
        stderr: String::from_utf8(stderr).expect("stderr is UTF-8"),
    }
}

/// Convenience: common data flags plus the tiny architecture.
pub fn data_flags(data: &ToyData) -> Vec<String> {
    vec![
        "--drugs".to_string(),
        data.drugs.display().to_string(),
        "--cells".to_string(),
        data.cells.display().to_string(),
        "--synergy".to_string(),
        data.synergy.display().to_string(),
    ]
}
