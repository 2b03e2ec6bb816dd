//! Dataset ingestion, cross-validation splitting, training, and evaluation.
//!
//! The pipeline moves from delimited text files to a trained classifier in
//! four stages, each usable on its own:
//!
//! 1. [`load_bundle`] reads the drug, cell-line, and synergy tables into a
//!    [`DatasetBundle`], validating references and collecting malformed rows
//!    into a rejects report instead of aborting.
//! 2. [`apply_labels`] converts Loewe scores into binary labels, excluding
//!    records in the ambiguous band.
//! 3. The split constructors ([`kfold_split`], [`leave_drug_out_split`],
//!    [`leave_tissue_out_split`], [`leave_combination_out_split`]) partition
//!    labeled records into train/test folds, and [`audit_split`] re-checks
//!    the defining property of each protocol.
//! 4. [`train`] fits a [`Model`](crate::model::Model) on one fold and
//!    [`evaluate`] scores it, producing a
//!    [`MetricsReport`](crate::metrics::MetricsReport).
//!
//! Every stage is deterministic for a fixed seed: splits shuffle with a
//! seeded generator, training draws mini-batch order and dropout masks from
//! a seeded generator, and evaluation is a pure function of the model.

mod data;
mod evaluate;
mod splits;
mod train;

pub use data::{
    apply_labels, load_bundle, load_cell_table, load_drug_table, render_rejects, CellLine,
    DatasetBundle, LabelSummary, Reject, SynergyRecord,
};
pub use evaluate::evaluate;
pub use splits::{
    audit_split, kfold_split, leave_combination_out_split, leave_drug_out_split,
    leave_tissue_out_split, Fold, Protocol, SplitPlan,
};
pub use train::{render_history, train, EpochStat, TrainResult, TrainSettings};

use crate::metrics::MetricsError;
use crate::model::ModelError;
use crate::molgraph::GraphError;
use crate::smiles::SmilesError;
use thiserror::Error;

/// Errors raised by ingestion, splitting, training, or evaluation.
#[derive(Debug, Error)]
pub enum PipelineError {
    /// File could not be opened or read.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// The delimited file itself is structurally unreadable.
    #[error("csv parse: {0}")]
    Csv(#[from] csv::Error),
    /// A required header column is absent.
    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: String, column: &'static str },
    /// The file contains no data rows.
    #[error("{file}: no data rows")]
    EmptyFile { file: String },
    /// Two synergy rows share the same unordered (drug, drug, cell) key.
    #[error("duplicate synergy measurement for ({drug_a}, {drug_b}) on {cell_line}")]
    DuplicateKey {
        drug_a: String,
        drug_b: String,
        cell_line: String,
    },
    /// A caller-supplied parameter is out of range.
    #[error("{name}: {reason}")]
    Parameter { name: &'static str, reason: String },
    /// A split or evaluation precondition is violated.
    #[error("protocol violation: {0}")]
    Protocol(String),
    /// Dataset contents are inconsistent.
    #[error("data error: {0}")]
    Data(String),
    /// A stored SMILES string failed to parse.
    #[error(transparent)]
    Smiles(#[from] SmilesError),
    /// Featurization of a parsed molecule failed.
    #[error(transparent)]
    Graph(#[from] GraphError),
    /// The model rejected its configuration or inputs.
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Metric computation rejected its inputs.
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    /// Training produced a non-finite loss and stopped.
    #[error(
        "training diverged: non-finite loss at epoch {epoch}, batch {batch}; \
         lower the learning rate or reduce delta to strengthen the penalty"
    )]
    NonFiniteLoss { epoch: usize, batch: usize },
}
