//! Cross-validation split protocols and their audits.
//!
//! Four protocols with increasing generalization difficulty:
//!
//! * `kfold`: records shuffled and dealt round-robin into k test sets;
//! * `leave_drug`: drugs dealt into folds, a record is test whenever
//!   either of its drugs is held out;
//! * `leave_tissue`: one fold per tissue, test is every record on that
//!   tissue's cell lines;
//! * `leave_combination`: unordered drug-pair keys dealt into folds, all
//!   records of a held-out pair are test regardless of cell line.
//!
//! Every plan carries enough information ([`Fold::holdout`]) for
//! [`audit_split`] to re-verify the defining exclusion property from
//! scratch, so a leaky split is caught before any training happens.

use super::{CellLine, PipelineError, SynergyRecord};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

/// Group-based protocols deal their groups into at most this many folds.
const MAX_GROUP_FOLDS: usize = 5;

/// Which splitting rule produced a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    KFold,
    LeaveDrug,
    LeaveTissue,
    LeaveCombination,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::KFold => "kfold",
            Protocol::LeaveDrug => "leave_drug",
            Protocol::LeaveTissue => "leave_tissue",
            Protocol::LeaveCombination => "leave_combination",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "kfold" => Ok(Protocol::KFold),
            "leave_drug" => Ok(Protocol::LeaveDrug),
            "leave_tissue" => Ok(Protocol::LeaveTissue),
            "leave_combination" => Ok(Protocol::LeaveCombination),
            _ => Err(PipelineError::Parameter {
                name: "protocol",
                reason: format!(
                    "unknown protocol `{s}` (expected kfold, leave_drug, leave_tissue, \
                     or leave_combination)"
                ),
            }),
        }
    }
}

/// One train/test division. Indices refer to the record slice the plan
/// was built from; `holdout` names the excluded groups (drug ids, a
/// tissue, or `a|b` pair keys; empty for kfold).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub name: String,
    pub holdout: Vec<String>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// A full cross-validation plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub protocol: Protocol,
    pub folds: Vec<Fold>,
}

/// Unordered pair key used by the combination protocol.
fn pair_label(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}|{b}")
    } else {
        format!("{b}|{a}")
    }
}

fn empty_folds(count: usize) -> Vec<Fold> {
    (0..count)
        .map(|i| Fold {
            name: format!("fold{i}"),
            holdout: Vec::new(),
            train: Vec::new(),
            test: Vec::new(),
        })
        .collect()
}

/// Shuffles record indices with the seed and deals them round-robin into
/// k test sets; each fold trains on the complement.
pub fn kfold_split(
    records: &[SynergyRecord],
    k: usize,
    seed: u64,
) -> Result<SplitPlan, PipelineError> {
    if k < 2 {
        return Err(PipelineError::Parameter {
            name: "k",
            reason: format!("must be at least 2, got {k}"),
        });
    }
    if records.len() < k {
        return Err(PipelineError::Parameter {
            name: "k",
            reason: format!("{} records cannot fill {k} folds", records.len()),
        });
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = empty_folds(k);
    for (j, &idx) in order.iter().enumerate() {
        folds[j % k].test.push(idx);
    }
    for fold in &mut folds {
        let test: HashSet<usize> = fold.test.iter().copied().collect();
        fold.train = (0..records.len()).filter(|i| !test.contains(i)).collect();
        fold.test.sort_unstable();
    }
    Ok(SplitPlan {
        protocol: Protocol::KFold,
        folds,
    })
}

/// Deals distinct drugs into at most five folds; a record is test in a
/// fold whenever either of its drugs is held out there.
pub fn leave_drug_out_split(
    records: &[SynergyRecord],
    seed: u64,
) -> Result<SplitPlan, PipelineError> {
    let mut drugs: Vec<String> = records
        .iter()
        .flat_map(|r| [r.drug_a.clone(), r.drug_b.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if drugs.len() < 2 {
        return Err(PipelineError::Protocol(
            "leave-drug-out needs at least 2 distinct drugs".to_string(),
        ));
    }
    drugs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_count = drugs.len().min(MAX_GROUP_FOLDS);
    let mut folds = empty_folds(fold_count);
    for (j, drug) in drugs.into_iter().enumerate() {
        folds[j % fold_count].holdout.push(drug);
    }
    for fold in &mut folds {
        fold.holdout.sort();
        let held: HashSet<&str> = fold.holdout.iter().map(String::as_str).collect();
        for (i, record) in records.iter().enumerate() {
            if held.contains(record.drug_a.as_str()) || held.contains(record.drug_b.as_str()) {
                fold.test.push(i);
            } else {
                fold.train.push(i);
            }
        }
    }
    Ok(SplitPlan {
        protocol: Protocol::LeaveDrug,
        folds,
    })
}

/// One fold per tissue in the cell table; test is every record whose
/// cell line carries that tissue. Tissues with no records are skipped,
/// and the returned warnings name them.
pub fn leave_tissue_out_split(
    records: &[SynergyRecord],
    cells: &BTreeMap<String, CellLine>,
) -> Result<(SplitPlan, Vec<String>), PipelineError> {
    for (id, cell) in cells {
        if cell.tissue.trim().is_empty() {
            return Err(PipelineError::Data(format!(
                "cell line `{id}` has no tissue tag"
            )));
        }
    }
    let mut record_tissue = Vec::with_capacity(records.len());
    for record in records {
        let cell = cells.get(&record.cell_line).ok_or_else(|| {
            PipelineError::Data(format!(
                "record references unknown cell line `{}`",
                record.cell_line
            ))
        })?;
        record_tissue.push(cell.tissue.as_str());
    }
    let tissues: BTreeSet<&str> = cells.values().map(|c| c.tissue.as_str()).collect();
    let mut folds = Vec::new();
    let mut warnings = Vec::new();
    for tissue in tissues {
        let test: Vec<usize> = (0..records.len())
            .filter(|&i| record_tissue[i] == tissue)
            .collect();
        if test.is_empty() {
            warnings.push(format!("tissue `{tissue}` has no records; fold skipped"));
            continue;
        }
        let train = (0..records.len())
            .filter(|&i| record_tissue[i] != tissue)
            .collect();
        folds.push(Fold {
            name: tissue.to_string(),
            holdout: vec![tissue.to_string()],
            train,
            test,
        });
    }
    Ok((
        SplitPlan {
            protocol: Protocol::LeaveTissue,
            folds,
        },
        warnings,
    ))
}

/// Deals unordered drug-pair keys into at most five folds; all records
/// of a held-out pair are test there, across every cell line.
pub fn leave_combination_out_split(
    records: &[SynergyRecord],
    seed: u64,
) -> Result<SplitPlan, PipelineError> {
    let mut pairs: Vec<String> = records
        .iter()
        .map(|r| pair_label(&r.drug_a, &r.drug_b))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if pairs.len() < 2 {
        return Err(PipelineError::Protocol(
            "leave-combination-out needs at least 2 distinct unordered drug pairs".to_string(),
        ));
    }
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_count = pairs.len().min(MAX_GROUP_FOLDS);
    let mut folds = empty_folds(fold_count);
    for (j, pair) in pairs.into_iter().enumerate() {
        folds[j % fold_count].holdout.push(pair);
    }
    for fold in &mut folds {
        fold.holdout.sort();
        let held: HashSet<&str> = fold.holdout.iter().map(String::as_str).collect();
        for (i, record) in records.iter().enumerate() {
            if held.contains(pair_label(&record.drug_a, &record.drug_b).as_str()) {
                fold.test.push(i);
            } else {
                fold.train.push(i);
            }
        }
    }
    Ok(SplitPlan {
        protocol: Protocol::LeaveCombination,
        folds,
    })
}

/// Re-verifies a plan against the records it was built from: every fold
/// splits the records into disjoint train/test covering all indices, and
/// the protocol's defining exclusion holds. KFold additionally requires
/// the test sets to partition the records with sizes differing by at
/// most one.
pub fn audit_split(
    plan: &SplitPlan,
    records: &[SynergyRecord],
    cells: &BTreeMap<String, CellLine>,
) -> Result<(), PipelineError> {
    let n = records.len();
    let violation = |fold: &Fold, detail: String| {
        Err(PipelineError::Protocol(format!(
            "{} fold `{}`: {detail}",
            plan.protocol, fold.name
        )))
    };
    for fold in &plan.folds {
        let train: HashSet<usize> = fold.train.iter().copied().collect();
        let test: HashSet<usize> = fold.test.iter().copied().collect();
        if test.is_empty() {
            return violation(fold, "empty test set".to_string());
        }
        if train.len() != fold.train.len() || test.len() != fold.test.len() {
            return violation(fold, "duplicate record indices".to_string());
        }
        if let Some(&i) = train.intersection(&test).next() {
            return violation(fold, format!("record {i} is in both train and test"));
        }
        if let Some(&i) = train.union(&test).find(|&&i| i >= n) {
            return violation(fold, format!("record index {i} out of range"));
        }
        if train.len() + test.len() != n {
            return violation(fold, "train and test do not cover all records".to_string());
        }
        match plan.protocol {
            Protocol::KFold => {}
            Protocol::LeaveDrug => {
                let held: HashSet<&str> = fold.holdout.iter().map(String::as_str).collect();
                for &i in &fold.test {
                    let r = &records[i];
                    if !held.contains(r.drug_a.as_str()) && !held.contains(r.drug_b.as_str()) {
                        return violation(fold, format!("test record {i} touches no held-out drug"));
                    }
                }
                for &i in &fold.train {
                    let r = &records[i];
                    if held.contains(r.drug_a.as_str()) || held.contains(r.drug_b.as_str()) {
                        return violation(
                            fold,
                            format!("held-out drug appears in train record {i}"),
                        );
                    }
                }
            }
            Protocol::LeaveTissue => {
                let [tissue] = fold.holdout.as_slice() else {
                    return violation(fold, "expected exactly one held-out tissue".to_string());
                };
                for &i in fold.test.iter().chain(&fold.train) {
                    let r = &records[i];
                    let cell = cells.get(&r.cell_line).ok_or_else(|| {
                        PipelineError::Data(format!(
                            "record references unknown cell line `{}`",
                            r.cell_line
                        ))
                    })?;
                    let in_test = test.contains(&i);
                    if in_test && cell.tissue != *tissue {
                        return violation(
                            fold,
                            format!("test record {i} is on tissue `{}`", cell.tissue),
                        );
                    }
                    if !in_test && cell.tissue == *tissue {
                        return violation(
                            fold,
                            format!("held-out tissue appears in train record {i}"),
                        );
                    }
                }
            }
            Protocol::LeaveCombination => {
                let held: HashSet<&str> = fold.holdout.iter().map(String::as_str).collect();
                for &i in &fold.test {
                    let r = &records[i];
                    if !held.contains(pair_label(&r.drug_a, &r.drug_b).as_str()) {
                        return violation(fold, format!("test record {i} is not a held-out pair"));
                    }
                }
                for &i in &fold.train {
                    let r = &records[i];
                    if held.contains(pair_label(&r.drug_a, &r.drug_b).as_str()) {
                        return violation(
                            fold,
                            format!("held-out pair appears in train record {i}"),
                        );
                    }
                }
            }
        }
    }
    if plan.protocol == Protocol::KFold {
        let mut seen = vec![0usize; n];
        for fold in &plan.folds {
            for &i in &fold.test {
                seen[i] += 1;
            }
        }
        if let Some(i) = seen.iter().position(|&c| c != 1) {
            return Err(PipelineError::Protocol(format!(
                "kfold test sets do not partition the records (record {i} appears {} times)",
                seen[i]
            )));
        }
        let sizes: Vec<usize> = plan.folds.iter().map(|f| f.test.len()).collect();
        let max = sizes.iter().max().copied().unwrap_or(0);
        let min = sizes.iter().min().copied().unwrap_or(0);
        if max - min > 1 {
            return Err(PipelineError::Protocol(format!(
                "kfold test sizes differ by more than 1 (min {min}, max {max})"
            )));
        }
    }
    Ok(())
}
