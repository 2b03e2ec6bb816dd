//! Evaluation of a frozen model on held-out records.

use super::{DatasetBundle, PipelineError, SynergyRecord};
use crate::metrics::{compute_report, MetricsReport};
use crate::model::Model;

/// Scores every test record with the pair-order-symmetrized probability
/// and computes the full metric report at a 0.5 decision threshold.
pub fn evaluate(
    model: &Model,
    bundle: &DatasetBundle,
    records: &[SynergyRecord],
    test_indices: &[usize],
) -> Result<MetricsReport, PipelineError> {
    if test_indices.is_empty() {
        return Err(PipelineError::Protocol(
            "test set must not be empty".to_string(),
        ));
    }
    let graphs = bundle.drug_graphs(records, test_indices)?;
    let mut labels = Vec::with_capacity(test_indices.len());
    let mut scores = Vec::with_capacity(test_indices.len());
    for &i in test_indices {
        let record = records
            .get(i)
            .ok_or_else(|| PipelineError::Data(format!("test index {i} out of range")))?;
        let label = record.label.ok_or_else(|| {
            PipelineError::Data(format!(
                "test record {i} has no label; run apply_labels first"
            ))
        })?;
        let prob = model.predict(
            &graphs[record.drug_a.as_str()],
            &graphs[record.drug_b.as_str()],
            bundle.expression(&record.cell_line)?,
        )?;
        labels.push(label);
        scores.push(prob);
    }
    Ok(compute_report(&labels, &scores, 0.5)?)
}
