//! Dataset ingestion: drug, cell-line, and synergy tables.
//!
//! Input is three delimited text files (UTF-8, comma separated, `#` lines
//! ignored):
//!
//! * drugs: header `drug_id,smiles`, one row per compound;
//! * cells: header `cell_id,tissue,g1,...,gD`, one row per cell line with
//!   a D-wide expression vector;
//! * synergy: header `drug_a,drug_b,cell_line,loewe`, one row per measured
//!   combination.
//!
//! Structural problems (missing column, no data rows, duplicate keys) abort
//! the load. Row-level problems (unparseable SMILES, unknown references,
//! malformed numbers) are collected into a rejects report and the remaining
//! rows are kept, so one bad row never discards a dataset.

use super::PipelineError;
use crate::molgraph::{build_dual_graph, DualGraph};
use crate::smiles::parse;
use csv::{ReaderBuilder, StringRecord};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

/// One measured drug combination. `label` is absent until
/// [`apply_labels`] assigns it.
#[derive(Debug, Clone, PartialEq)]
pub struct SynergyRecord {
    pub drug_a: String,
    pub drug_b: String,
    pub cell_line: String,
    pub loewe: f64,
    pub label: Option<u8>,
}

impl SynergyRecord {
    /// Unordered pair key: the two drug ids in sorted order.
    pub fn pair_key(&self) -> (String, String) {
        if self.drug_a <= self.drug_b {
            (self.drug_a.clone(), self.drug_b.clone())
        } else {
            (self.drug_b.clone(), self.drug_a.clone())
        }
    }
}

/// One cell line: tissue tag plus expression vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLine {
    pub tissue: String,
    pub expression: Vec<f64>,
}

/// One rejected input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    /// Which table the row came from: `drugs`, `cells`, or `synergy`.
    pub table: &'static str,
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: String,
}

/// A loaded dataset: validated tables plus the rows that failed.
#[derive(Debug, Clone, Default)]
pub struct DatasetBundle {
    /// Drug id to SMILES, every entry parseable.
    pub drugs: BTreeMap<String, String>,
    /// Cell id to tissue and expression, all vectors one width.
    pub cells: BTreeMap<String, CellLine>,
    /// Synergy rows whose references all resolve.
    pub records: Vec<SynergyRecord>,
    /// Rows dropped during ingestion, with reasons.
    pub rejects: Vec<Reject>,
}

impl DatasetBundle {
    /// Expression vector width, if any cell lines were loaded.
    pub fn expression_width(&self) -> Option<usize> {
        self.cells.values().next().map(|c| c.expression.len())
    }

    /// Expression vector for a cell line.
    pub fn expression(&self, cell_id: &str) -> Result<&[f64], PipelineError> {
        self.cells
            .get(cell_id)
            .map(|c| c.expression.as_slice())
            .ok_or_else(|| PipelineError::Data(format!("unknown cell line `{cell_id}`")))
    }

    /// Featurizes every drug referenced by the given record indices,
    /// keyed by drug id.
    pub fn drug_graphs(
        &self,
        records: &[SynergyRecord],
        indices: &[usize],
    ) -> Result<BTreeMap<String, DualGraph>, PipelineError> {
        let mut ids: BTreeSet<&str> = BTreeSet::new();
        for &i in indices {
            let record = records.get(i).ok_or_else(|| {
                PipelineError::Data(format!("record index {i} out of range"))
            })?;
            ids.insert(&record.drug_a);
            ids.insert(&record.drug_b);
        }
        let mut graphs = BTreeMap::new();
        for id in ids {
            let smiles = self
                .drugs
                .get(id)
                .ok_or_else(|| PipelineError::Data(format!("unknown drug id `{id}`")))?;
            let molecule = parse(smiles)?;
            graphs.insert(id.to_string(), build_dual_graph(&molecule, id)?);
        }
        Ok(graphs)
    }
}

/// Label counts produced by [`apply_labels`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelSummary {
    pub positive: usize,
    pub negative: usize,
    pub excluded: usize,
}

/// Converts Loewe scores to binary labels: above 10 is synergistic (1),
/// below 0 is antagonistic (0), and scores inside `[0, 10]` are excluded.
/// Returns the labeled records and the partition counts.
pub fn apply_labels(
    records: &[SynergyRecord],
) -> Result<(Vec<SynergyRecord>, LabelSummary), PipelineError> {
    let mut labeled = Vec::new();
    let mut summary = LabelSummary {
        positive: 0,
        negative: 0,
        excluded: 0,
    };
    for record in records {
        if !record.loewe.is_finite() {
            return Err(PipelineError::Data(format!(
                "non-finite loewe score for ({}, {}) on {}",
                record.drug_a, record.drug_b, record.cell_line
            )));
        }
        let label = if record.loewe > 10.0 {
            summary.positive += 1;
            1
        } else if record.loewe < 0.0 {
            summary.negative += 1;
            0
        } else {
            summary.excluded += 1;
            continue;
        };
        let mut out = record.clone();
        out.label = Some(label);
        labeled.push(out);
    }
    Ok((labeled, summary))
}

/// Renders the rejects report, one line per dropped row.
pub fn render_rejects(rejects: &[Reject]) -> String {
    let mut out = String::new();
    for reject in rejects {
        writeln!(out, "{} line {}: {}", reject.table, reject.line, reject.reason)
            .expect("string writes cannot fail");
    }
    out
}

struct TableReader {
    rows: Vec<(u64, StringRecord)>,
    header_len: usize,
}

fn read_table(path: &Path, required: &[&'static str]) -> Result<TableReader, PipelineError> {
    let file = path.display().to_string();
    let mut reader = ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() == 0 || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(PipelineError::EmptyFile { file });
    }
    for (i, &name) in required.iter().enumerate() {
        if headers.get(i).map(str::trim) != Some(name) {
            return Err(PipelineError::MissingColumn { file, column: name });
        }
    }
    let mut rows = Vec::new();
    for result in reader.records() {
        let row = result?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, row));
    }
    if rows.is_empty() {
        return Err(PipelineError::EmptyFile { file });
    }
    Ok(TableReader {
        rows,
        header_len: headers.len(),
    })
}

fn parse_finite(text: &str) -> Result<f64, String> {
    let value: f64 = text
        .trim()
        .parse()
        .map_err(|_| format!("`{}` is not a number", text.trim()))?;
    if !value.is_finite() {
        return Err(format!("`{}` is not finite", text.trim()));
    }
    Ok(value)
}

/// Loads just the drug table: id to SMILES plus rejected rows.
pub fn load_drug_table(
    path: &Path,
) -> Result<(BTreeMap<String, String>, Vec<Reject>), PipelineError> {
    let table = read_table(path, &["drug_id", "smiles"])?;
    let mut drugs = BTreeMap::new();
    let mut rejects = Vec::new();
    for (line, row) in &table.rows {
        if row.len() != 2 {
            rejects.push(Reject {
                table: "drugs",
                line: *line,
                reason: format!("expected 2 fields, found {}", row.len()),
            });
            continue;
        }
        let id = row[0].trim().to_string();
        let smiles = row[1].trim().to_string();
        if id.is_empty() {
            rejects.push(Reject {
                table: "drugs",
                line: *line,
                reason: "empty drug id".to_string(),
            });
            continue;
        }
        if let Err(e) = parse(&smiles) {
            rejects.push(Reject {
                table: "drugs",
                line: *line,
                reason: format!("unparseable smiles: {e}"),
            });
            continue;
        }
        if drugs.insert(id.clone(), smiles).is_some() {
            return Err(PipelineError::Data(format!("duplicate drug id `{id}`")));
        }
    }
    Ok((drugs, rejects))
}

/// Loads just the cell-line table: id to tissue/expression plus rejected
/// rows.
pub fn load_cell_table(
    path: &Path,
) -> Result<(BTreeMap<String, CellLine>, Vec<Reject>), PipelineError> {
    let table = read_table(path, &["cell_id", "tissue"])?;
    if table.header_len < 3 {
        return Err(PipelineError::MissingColumn {
            file: path.display().to_string(),
            column: "g1",
        });
    }
    let width = table.header_len - 2;
    let mut cells = BTreeMap::new();
    let mut rejects = Vec::new();
    for (line, row) in &table.rows {
        if row.len() != table.header_len {
            rejects.push(Reject {
                table: "cells",
                line: *line,
                reason: format!("expected {} fields, found {}", table.header_len, row.len()),
            });
            continue;
        }
        let id = row[0].trim().to_string();
        let tissue = row[1].trim().to_string();
        if id.is_empty() {
            rejects.push(Reject {
                table: "cells",
                line: *line,
                reason: "empty cell id".to_string(),
            });
            continue;
        }
        if tissue.is_empty() {
            rejects.push(Reject {
                table: "cells",
                line: *line,
                reason: "missing tissue tag".to_string(),
            });
            continue;
        }
        let mut expression = Vec::with_capacity(width);
        let mut bad = None;
        for field in row.iter().skip(2) {
            match parse_finite(field) {
                Ok(v) => expression.push(v),
                Err(e) => {
                    bad = Some(e);
                    break;
                }
            }
        }
        if let Some(reason) = bad {
            rejects.push(Reject {
                table: "cells",
                line: *line,
                reason: format!("expression value: {reason}"),
            });
            continue;
        }
        let cell = CellLine { tissue, expression };
        if cells.insert(id.clone(), cell).is_some() {
            return Err(PipelineError::Data(format!("duplicate cell id `{id}`")));
        }
    }
    Ok((cells, rejects))
}

/// Loads the three tables into a [`DatasetBundle`].
///
/// Fatal errors: unreadable file, missing header column, no data rows,
/// duplicate drug or cell id, or two synergy rows with the same unordered
/// `(drug, drug, cell)` key. Everything row-local lands in
/// [`DatasetBundle::rejects`] instead.
pub fn load_bundle(
    drugs_path: &Path,
    cells_path: &Path,
    synergy_path: &Path,
) -> Result<DatasetBundle, PipelineError> {
    let mut bundle = DatasetBundle::default();

    let (drugs, drug_rejects) = load_drug_table(drugs_path)?;
    bundle.drugs = drugs;
    bundle.rejects.extend(drug_rejects);

    let (cells, cell_rejects) = load_cell_table(cells_path)?;
    bundle.cells = cells;
    bundle.rejects.extend(cell_rejects);

    let synergy = read_table(synergy_path, &["drug_a", "drug_b", "cell_line", "loewe"])?;
    let mut seen: HashSet<(String, String, String)> = HashSet::new();
    for (line, row) in &synergy.rows {
        if row.len() != 4 {
            bundle.rejects.push(Reject {
                table: "synergy",
                line: *line,
                reason: format!("expected 4 fields, found {}", row.len()),
            });
            continue;
        }
        let drug_a = row[0].trim().to_string();
        let drug_b = row[1].trim().to_string();
        let cell_line = row[2].trim().to_string();
        let mut missing = Vec::new();
        if !bundle.drugs.contains_key(&drug_a) {
            missing.push(format!("drug `{drug_a}`"));
        }
        if !bundle.drugs.contains_key(&drug_b) {
            missing.push(format!("drug `{drug_b}`"));
        }
        if !bundle.cells.contains_key(&cell_line) {
            missing.push(format!("cell line `{cell_line}`"));
        }
        if !missing.is_empty() {
            bundle.rejects.push(Reject {
                table: "synergy",
                line: *line,
                reason: format!("unknown {}", missing.join(", ")),
            });
            continue;
        }
        let loewe = match parse_finite(&row[3]) {
            Ok(v) => v,
            Err(reason) => {
                bundle.rejects.push(Reject {
                    table: "synergy",
                    line: *line,
                    reason: format!("loewe score: {reason}"),
                });
                continue;
            }
        };
        let record = SynergyRecord {
            drug_a,
            drug_b,
            cell_line,
            loewe,
            label: None,
        };
        let (lo, hi) = record.pair_key();
        if !seen.insert((lo, hi, record.cell_line.clone())) {
            return Err(PipelineError::DuplicateKey {
                drug_a: record.drug_a,
                drug_b: record.drug_b,
                cell_line: record.cell_line,
            });
        }
        bundle.records.push(record);
    }

    Ok(bundle)
}
