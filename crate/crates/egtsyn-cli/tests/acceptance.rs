//! Release gates, one test per gate, each printing a PASS line with the
//! measured numbers when it holds.
//!
//! The gates cover gradient correctness for every model variant, invariance
//! of the prediction under node relabeling, the SMILES parser against a
//! hand-verified corpus, atom-bond graph structure on generated molecules,
//! the rank-sum ROC-AUC against a pairwise brute force, Loewe label
//! thresholding, a separable overfit oracle, split audits on random
//! datasets, the ablation report shape with parameter-set containment, and
//! bytewise determinism of training runs.

mod common;

use common::{data_flags, egtsyn, run, write_toy_bundle, TINY_MODEL_FLAGS};
use egtsyn::metrics::{kappa, roc_auc, Confusion};
use egtsyn::model::{Model, ModelConfig, Pooling, Variant};
use egtsyn::molgraph::{build_dual_graph, NodeKind};
use egtsyn::pipeline::{
    apply_labels, audit_split, evaluate, kfold_split, leave_combination_out_split,
    leave_drug_out_split, leave_tissue_out_split, train, CellLine, DatasetBundle, LabelSummary,
    SynergyRecord, TrainSettings,
};
use egtsyn::smiles::{parse, SmilesError};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

/// Hand-verified corpus: SMILES, atoms, bonds, aromatic atoms, ring bonds.
const CURATED: [(&str, usize, usize, usize, usize); 20] = [
    ("CCO", 3, 2, 0, 0),
    ("CCN", 3, 2, 0, 0),
    ("CC(C)C", 4, 3, 0, 0),
    ("CC(=O)O", 4, 3, 0, 0),
    ("O=C=O", 3, 2, 0, 0),
    ("C#N", 2, 1, 0, 0),
    ("[NH4+]", 1, 0, 0, 0),
    ("OP(O)(O)=O", 5, 4, 0, 0),
    ("C1CC1", 3, 3, 0, 3),
    ("C1CCCCC1", 6, 6, 0, 6),
    ("C1=CCCCC1", 6, 6, 0, 6),
    ("c1ccccc1", 6, 6, 6, 6),
    ("Cc1ccccc1", 7, 7, 6, 6),
    ("C=Cc1ccccc1", 8, 8, 6, 6),
    ("c1ccncc1", 6, 6, 6, 6),
    ("c1ccoc1", 5, 5, 5, 5),
    ("c1ccsc1", 5, 5, 5, 5),
    ("c1ccc2ccccc2c1", 10, 11, 10, 11),
    ("CC(=O)Oc1ccccc1C(=O)O", 13, 13, 6, 6),
    ("Cn1cnc2c1c(=O)n(C)c(=O)n2C", 14, 15, 9, 10),
];

/// Valid decorated aromatics the generator can emit verbatim.
const AROMATIC_POOL: [&str; 8] = [
    "c1ccccc1",
    "Cc1ccccc1",
    "CCc1ccccc1",
    "Oc1ccccc1",
    "Nc1ccccc1",
    "c1ccncc1",
    "c1ccoc1",
    "Cc1ccc(O)cc1",
];

fn pick_element(rng: &mut ChaCha8Rng) -> (&'static str, usize) {
    match rng.gen_range(0..10) {
        0..=5 => ("C", 4),
        6..=7 => ("N", 3),
        _ => ("O", 2),
    }
}

/// Emits one atom and its subtree, tracking free valence on both sides so
/// every generated bond is legal. A double bond is only drawn when the
/// parent has two free slots; the root always grows at least one child
/// while the atom budget lasts.
fn grow(rng: &mut ChaCha8Rng, budget: &mut usize, parent_free: usize, root: bool) -> String {
    let (symbol, valence) = pick_element(rng);
    *budget -= 1;
    let (prefix, bond_used) = if !root && parent_free >= 2 && rng.gen_bool(0.2) {
        ("=", 2)
    } else if root {
        ("", 0)
    } else {
        ("", 1)
    };
    let mut free = valence - bond_used;
    let mut children: Vec<String> = Vec::new();
    while free > 0 && *budget > 0 && ((root && children.is_empty()) || rng.gen_bool(0.55)) {
        let child = grow(rng, budget, free, false);
        free -= if child.starts_with('=') { 2 } else { 1 };
        children.push(child);
    }
    let mut out = String::from(prefix);
    out.push_str(symbol);
    if let Some((last, rest)) = children.split_last() {
        for child in rest {
            out.push('(');
            out.push_str(child);
            out.push(')');
        }
        out.push_str(last);
    }
    out
}

/// A single saturated ring of 3 to 6 members with occasional heteroatoms
/// and methyl decorations.
fn random_ring(rng: &mut ChaCha8Rng) -> String {
    let size = rng.gen_range(3..=6usize);
    let mut out = String::from("C1");
    for _ in 0..size - 2 {
        match rng.gen_range(0..6) {
            0 => out.push('N'),
            1 => out.push('O'),
            2 => out.push_str("C(C)"),
            _ => out.push('C'),
        }
    }
    out.push_str("C1");
    out
}

/// A random small molecule as SMILES: branched trees with double bonds,
/// saturated rings, or a decorated aromatic.
fn random_smiles(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..10) {
        0..=5 => {
            let mut budget = rng.gen_range(2..=10usize);
            grow(rng, &mut budget, 0, true)
        }
        6..=7 => random_ring(rng),
        _ => AROMATIC_POOL[rng.gen_range(0..AROMATIC_POOL.len())].to_string(),
    }
}

/// ROC-AUC by exhaustive positive/negative pair comparison, ties at half.
fn brute_force_auc(labels: &[u8], scores: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// A dataset with random drugs, cell lines, tissues, and record pairings.
fn random_dataset(rng: &mut ChaCha8Rng) -> (Vec<SynergyRecord>, BTreeMap<String, CellLine>) {
    let tissues = ["lung", "breast", "skin", "bone"];
    let drug_count = rng.gen_range(4..=12usize);
    let cell_count = rng.gen_range(3..=8usize);
    let mut cells = BTreeMap::new();
    for i in 0..cell_count {
        cells.insert(
            format!("C{i}"),
            CellLine {
                tissue: tissues[rng.gen_range(0..tissues.len())].to_string(),
                expression: (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            },
        );
    }
    let mut records = Vec::new();
    for _ in 0..rng.gen_range(30..=120usize) {
        let a = rng.gen_range(0..drug_count);
        let b = (a + rng.gen_range(1..drug_count)) % drug_count;
        records.push(SynergyRecord {
            drug_a: format!("D{a}"),
            drug_b: format!("D{b}"),
            cell_line: format!("C{}", rng.gen_range(0..cell_count)),
            loewe: rng.gen_range(-30.0..30.0),
            label: None,
        });
    }
    (records, cells)
}

/// A 32-record linearly separable bundle: the label is fully determined by
/// the cell line, and the two cell groups sit at expression +2 and -2 with
/// small noise, so a trained model can drive train accuracy to 1.0.
fn separable_bundle() -> (DatasetBundle, Vec<SynergyRecord>) {
    let mut bundle = DatasetBundle::default();
    for (id, smiles) in [
        ("S1", "CC(=O)Oc1ccccc1C(=O)O"),
        ("S2", "Cn1cnc2c1c(=O)n(C)c(=O)n2C"),
        ("N1", "CCO"),
        ("N2", "CC(C)C"),
        ("N3", "c1ccncc1"),
        ("N4", "CC(=O)O"),
    ] {
        bundle.drugs.insert(id.to_string(), smiles.to_string());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (cell, base) in [("P1", 2.0), ("P2", 2.0), ("Q1", -2.0), ("Q2", -2.0)] {
        let expression = (0..954).map(|_| base + rng.gen_range(-0.3..0.3)).collect();
        bundle.cells.insert(
            cell.to_string(),
            CellLine {
                tissue: "synthetic".to_string(),
                expression,
            },
        );
    }
    let mut raw = Vec::new();
    for a in ["S1", "S2"] {
        for b in ["N1", "N2", "N3", "N4"] {
            for (cell, loewe) in [("P1", 20.0), ("P2", 20.0), ("Q1", -20.0), ("Q2", -20.0)] {
                raw.push(SynergyRecord {
                    drug_a: a.to_string(),
                    drug_b: b.to_string(),
                    cell_line: cell.to_string(),
                    loewe,
                    label: None,
                });
            }
        }
    }
    let (records, summary) = apply_labels(&raw).unwrap();
    assert_eq!((summary.positive, summary.negative), (16, 16));
    (bundle, records)
}

#[test]
fn gate_01_gradient_check_passes_for_every_variant() {
    let mut notes = Vec::new();
    for variant in ["EGTSyn", "GTSyn", "EGSyn", "GSyn"] {
        let started = Instant::now();
        let out = run(egtsyn().args([
            "gradcheck",
            "--variant",
            variant,
            "--seed",
            "11",
            "--tolerance",
            "1e-4",
        ]));
        let secs = started.elapsed().as_secs_f64();
        assert_eq!(
            out.code, 0,
            "{variant} gradcheck failed\nstdout: {}stderr: {}",
            out.stdout, out.stderr
        );
        assert!(out.stdout.contains(" pass"), "{variant}: {}", out.stdout);
        assert!(!out.stdout.contains("FAIL"), "{variant}: {}", out.stdout);
        assert!(secs < 60.0, "{variant} gradcheck took {secs:.1}s");
        notes.push(format!("{variant} {secs:.1}s"));
    }
    println!(
        "PASS gradient suite: all variants within 1e-4 ({})",
        notes.join(", ")
    );
}

#[test]
fn gate_02_prediction_is_invariant_to_node_relabeling() {
    let model = Model::new(ModelConfig {
        variant: Variant::EGTSyn,
        gcn_layers: 2,
        gcn_hidden: 10,
        graph_embed_dim: 8,
        attention_heads: 2,
        ffn_hidden: 12,
        cell_input_dim: 6,
        cell_hidden: (10, 8),
        cell_embed_dim: 6,
        head_hidden: (12, 6),
        dropout_rate: 0.2,
        pooling: Pooling::Max,
        seed: 21,
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e);
    let partner =
        build_dual_graph(&parse("Cn1cnc2c1c(=O)n(C)c(=O)n2C").unwrap(), "partner").unwrap();
    let cell: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let smiles = random_smiles(&mut rng);
        let mol = parse(&smiles)
            .unwrap_or_else(|e| panic!("generated SMILES `{smiles}` failed to parse: {e}"));
        let mut atom_perm: Vec<usize> = (0..mol.atom_count()).collect();
        let mut bond_perm: Vec<usize> = (0..mol.bond_count()).collect();
        atom_perm.shuffle(&mut rng);
        bond_perm.shuffle(&mut rng);
        let relabeled = mol.permuted(&atom_perm, &bond_perm);
        let original = build_dual_graph(&mol, "m").unwrap();
        let shuffled = build_dual_graph(&relabeled, "m").unwrap();
        let p0 = model.predict(&original, &partner, &cell).unwrap();
        let p1 = model.predict(&shuffled, &partner, &cell).unwrap();
        let diff = (p0 - p1).abs();
        assert!(
            diff <= 1e-9,
            "molecule {i} `{smiles}`: relabeling moved the probability by {diff:e}"
        );
        worst = worst.max(diff);
    }
    println!("PASS node relabeling: 100 molecules, worst probability shift {worst:.3e} <= 1e-9");
}

#[test]
fn gate_03_parser_corpus_exact_counts_and_positioned_errors() {
    for &(smiles, atoms, bonds, aromatic, ring) in &CURATED {
        let mol =
            parse(smiles).unwrap_or_else(|e| panic!("`{smiles}` failed to parse: {e}"));
        assert_eq!(mol.atom_count(), atoms, "`{smiles}` atom count");
        assert_eq!(mol.bond_count(), bonds, "`{smiles}` bond count");
        let aromatic_atoms = mol.atoms().iter().filter(|a| a.aromatic).count();
        assert_eq!(aromatic_atoms, aromatic, "`{smiles}` aromatic atom count");
        let ring_bonds = mol.bonds().iter().filter(|b| b.in_ring).count();
        assert_eq!(ring_bonds, ring, "`{smiles}` ring bond count");
    }
    let malformed = [
        ("CC(C", SmilesError::UnbalancedParen { offset: 2 }),
        ("CC)C", SmilesError::UnbalancedParen { offset: 2 }),
        (
            "C1CC",
            SmilesError::UnmatchedRingClosure {
                label: 1,
                offset: 1,
            },
        ),
        ("CC=", SmilesError::DanglingBond { offset: 2 }),
        ("=C", SmilesError::StrayBond { offset: 0 }),
        ("CQ", SmilesError::Lexical { ch: 'Q', offset: 1 }),
        (
            "[Zz]",
            SmilesError::UnknownElement {
                symbol: "Z".to_string(),
                offset: 1,
            },
        ),
        ("C11", SmilesError::RingSelfBond { offset: 2 }),
    ];
    for (smiles, expected) in malformed {
        let err = parse(smiles)
            .map(|mol| panic!("`{smiles}` parsed into {} atoms", mol.atom_count()))
            .unwrap_err();
        assert_eq!(err, expected, "`{smiles}` error");
    }
    println!("PASS parser corpus: 20 curated molecules exact, 8 malformed rejected with positions");
}

#[test]
fn gate_04_atom_bond_graph_structure_on_generated_molecules() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD0A1);
    let mut largest = 0;
    for i in 0..500 {
        let smiles = random_smiles(&mut rng);
        let mol = parse(&smiles)
            .unwrap_or_else(|e| panic!("generated SMILES `{smiles}` failed to parse: {e}"));
        let (n, m) = (mol.atom_count(), mol.bond_count());
        let graph = build_dual_graph(&mol, "m").unwrap().atom_bond_graph;
        assert_eq!(graph.node_count(), n + m, "molecule {i} `{smiles}` node count");
        let atom_nodes = graph
            .node_kind
            .iter()
            .filter(|&&k| k == NodeKind::Atom)
            .count();
        assert_eq!(atom_nodes, n, "molecule {i} `{smiles}` atom node count");
        let mut incident_entries = 0;
        for r in 0..n + m {
            for c in 0..n + m {
                let value = graph.adjacency_norm.get(r, c);
                if r == c {
                    assert!(value > 0.0, "molecule {i} `{smiles}`: missing self-loop {r}");
                    continue;
                }
                if value != 0.0 {
                    assert_ne!(
                        graph.node_kind[r], graph.node_kind[c],
                        "molecule {i} `{smiles}`: edge {r}-{c} joins two like nodes"
                    );
                    incident_entries += 1;
                }
            }
        }
        assert_eq!(
            incident_entries,
            4 * m,
            "molecule {i} `{smiles}`: expected 2m = {} incidences stored symmetrically",
            2 * m
        );
        largest = largest.max(n + m);
    }
    println!(
        "PASS dual-graph structure: 500 molecules (largest {largest} nodes), \
         n+m nodes, 2m incidences, bipartite"
    );
}

#[test]
fn gate_05_metric_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA0C);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=200usize);
        let quantized = rng.gen_bool(0.5);
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        labels[0] = 1;
        labels[1] = 0;
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if quantized {
                    rng.gen_range(0..8) as f64 / 4.0
                } else {
                    rng.gen_range(-5.0..5.0)
                }
            })
            .collect();
        let fast = roc_auc(&labels, &scores).unwrap();
        let brute = brute_force_auc(&labels, &scores);
        let diff = (fast - brute).abs();
        assert!(diff <= 1e-12, "n={n} quantized={quantized}: |{fast} - {brute}| = {diff:e}");
        worst = worst.max(diff);
    }
    assert_eq!(roc_auc(&[1, 0, 1, 0], &[0.8, 0.7, 0.6, 0.2]).unwrap(), 0.75);
    assert_eq!(
        kappa(Confusion {
            true_pos: 3,
            false_pos: 1,
            true_neg: 4,
            false_neg: 2,
        }),
        Some(0.4)
    );
    println!(
        "PASS metric oracles: 1000 instances, worst rank-sum deviation {worst:.2e} <= 1e-12; \
         hand ROC-AUC 0.75 and kappa 0.4 exact"
    );
}

#[test]
fn gate_06_loewe_band_thresholding() {
    let record = |loewe: f64| SynergyRecord {
        drug_a: "A".to_string(),
        drug_b: "B".to_string(),
        cell_line: "C".to_string(),
        loewe,
        label: None,
    };
    let (labeled, summary) =
        apply_labels(&[record(15.0), record(-3.0), record(5.0)]).unwrap();
    assert_eq!(labeled.len(), 2);
    assert_eq!((labeled[0].loewe, labeled[0].label), (15.0, Some(1)));
    assert_eq!((labeled[1].loewe, labeled[1].label), (-3.0, Some(0)));
    assert_eq!(
        summary,
        LabelSummary {
            positive: 1,
            negative: 1,
            excluded: 1,
        }
    );
    println!("PASS loewe thresholding: 15 -> 1, -3 -> 0, 5 -> excluded");
}

#[test]
fn gate_07_separable_bundle_reaches_perfect_train_accuracy() {
    let started = Instant::now();
    let (bundle, records) = separable_bundle();
    assert_eq!(records.len(), 32);
    let indices: Vec<usize> = (0..records.len()).collect();
    let mut model = Model::new(ModelConfig::default()).unwrap();
    let chunk = 5;
    let mut epochs_run = 0;
    let mut accuracy = 0.0;
    while epochs_run < 500 {
        let settings = TrainSettings {
            epochs: chunk,
            seed: epochs_run as u64,
            ..TrainSettings::default()
        };
        train(&mut model, &bundle, &records, &indices, &[], &settings).unwrap();
        epochs_run += chunk;
        accuracy = evaluate(&model, &bundle, &records, &indices)
            .unwrap()
            .acc
            .unwrap();
        if accuracy == 1.0 {
            break;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert_eq!(
        accuracy, 1.0,
        "train accuracy stuck at {accuracy} after {epochs_run} epochs"
    );
    assert!(secs < 300.0, "overfit oracle took {secs:.1}s");
    println!(
        "PASS overfit oracle: train ACC 1.0 after {epochs_run} of 500 epochs in {secs:.1}s"
    );
}

#[test]
fn gate_08_split_audits_on_random_datasets() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED5);
    for ds in 0..50 {
        let (records, cells) = random_dataset(&mut rng);
        let seed: u64 = rng.gen();
        let kfold = kfold_split(&records, 5, seed).unwrap();
        audit_split(&kfold, &records, &cells)
            .unwrap_or_else(|e| panic!("dataset {ds} kfold: {e}"));
        let sizes: Vec<usize> = kfold.folds.iter().map(|f| f.test.len()).collect();
        let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
        assert!(spread <= 1, "dataset {ds}: kfold test sizes {sizes:?}");
        let drug = leave_drug_out_split(&records, seed).unwrap();
        audit_split(&drug, &records, &cells)
            .unwrap_or_else(|e| panic!("dataset {ds} leave_drug: {e}"));
        let (tissue, _warnings) = leave_tissue_out_split(&records, &cells).unwrap();
        audit_split(&tissue, &records, &cells)
            .unwrap_or_else(|e| panic!("dataset {ds} leave_tissue: {e}"));
        let combination = leave_combination_out_split(&records, seed).unwrap();
        audit_split(&combination, &records, &cells)
            .unwrap_or_else(|e| panic!("dataset {ds} leave_combination: {e}"));
    }
    println!("PASS split audits: 4 protocols x 50 random datasets, kfold sizes within 1");
}

#[test]
fn gate_09_ablation_table_shape_and_parameter_containment() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_bundle(dir.path());
    let out_dir = dir.path().join("ablate");
    let mut cmd = egtsyn();
    cmd.args(["ablate", "--k", "3", "--epochs", "2", "--seed", "3", "--out"])
        .arg(&out_dir)
        .args(data_flags(&data))
        .args(TINY_MODEL_FLAGS);
    let out = run(&mut cmd);
    assert_eq!(out.code, 0, "ablate failed: {}", out.stderr);
    let table = std::fs::read_to_string(out_dir.join("ablation.txt")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[4], "variant params roc_auc pr_auc acc bacc kappa");
    assert_eq!(lines.len(), 9);
    for (row, variant) in lines[5..].iter().zip(Variant::ALL) {
        let fields: Vec<&str> = row.split_whitespace().collect();
        assert_eq!(fields.len(), 7, "row `{row}`");
        assert_eq!(fields[0], variant.name(), "row `{row}`");
        assert!(fields[1].parse::<usize>().is_ok(), "row `{row}` params");
        for field in &fields[2..] {
            assert!(
                *field == "undefined" || field.contains('\u{b1}'),
                "row `{row}`: cell `{field}` is neither a mean\u{b1}sd nor undefined"
            );
        }
    }
    let names = |variant: Variant| -> BTreeSet<String> {
        let config = ModelConfig {
            variant,
            gcn_layers: 2,
            gcn_hidden: 6,
            graph_embed_dim: 4,
            attention_heads: 2,
            ffn_hidden: 6,
            cell_input_dim: 3,
            cell_hidden: (5, 4),
            cell_embed_dim: 3,
            head_hidden: (6, 4),
            dropout_rate: 0.1,
            pooling: Pooling::Max,
            seed: 0,
        };
        Model::new(config)
            .unwrap()
            .param_names()
            .map(str::to_string)
            .collect()
    };
    let full = names(Variant::EGTSyn);
    let transformer_only = names(Variant::GTSyn);
    let bond_only = names(Variant::EGSyn);
    let plain = names(Variant::GSyn);
    assert!(plain.is_subset(&transformer_only) && plain.len() < transformer_only.len());
    assert!(plain.is_subset(&bond_only) && plain.len() < bond_only.len());
    assert!(transformer_only.is_subset(&full) && transformer_only.len() < full.len());
    assert!(bond_only.is_subset(&full) && bond_only.len() < full.len());
    println!(
        "PASS ablation: 4x5 table emitted; parameter names nest GSyn < GTSyn/EGSyn < EGTSyn"
    );
}

#[test]
fn gate_10_identical_flags_and_seed_reproduce_artifacts_bytewise() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy_bundle(dir.path());
    let train_into = |out_dir: &Path| {
        let mut cmd = egtsyn();
        cmd.args([
            "train",
            "--variant",
            "EGTSyn",
            "--protocol",
            "kfold",
            "--k",
            "3",
            "--fold",
            "0",
            "--epochs",
            "3",
            "--batch-size",
            "4",
            "--lr",
            "1e-3",
            "--seed",
            "9",
            "--out",
        ])
        .arg(out_dir)
        .args(data_flags(&data))
        .args(TINY_MODEL_FLAGS);
        let out = run(&mut cmd);
        assert_eq!(out.code, 0, "train failed: {}", out.stderr);
    };
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    train_into(&first);
    train_into(&second);
    for file in ["checkpoint.txt", "history.csv"] {
        let left = std::fs::read(first.join(file)).unwrap();
        let right = std::fs::read(second.join(file)).unwrap();
        assert_eq!(left, right, "{file} differs between identical runs");
    }
    println!("PASS determinism: checkpoint.txt and history.csv byte-identical across runs");
}
