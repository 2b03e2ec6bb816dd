//! Central-difference verification of analytic gradients.
//!
//! The checker perturbs one parameter entry at a time, re-evaluates the loss
//! closure, and compares the finite-difference slope against the analytic
//! gradient supplied by the caller. The closure must be deterministic: it is
//! evaluated twice up front and both results must match bit for bit,
//! otherwise the finite differences would measure noise instead of slope.

use super::{Tensor, TensorError};

/// Step size for central differences.
pub const FD_STEP: f64 = 1e-5;

/// Worst relative error observed for one named parameter tensor.
#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub name: String,
    pub max_rel_err: f64,
    pub worst_index: usize,
}

/// Outcome of a gradient check over a full parameter set.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.max_rel_err <= self.tolerance)
    }

    /// Entry with the largest relative error, if any parameters were checked.
    pub fn worst(&self) -> Option<&GradCheckEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.max_rel_err.total_cmp(&b.max_rel_err))
    }
}

/// Relative error |a - b| / max(|a|, |b|, 1), with the index of the worst
/// entry. Returns (0.0, 0) for empty slices.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> (f64, usize) {
    let mut worst = 0.0;
    let mut worst_index = 0;
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let err = (a - n).abs() / a.abs().max(n.abs()).max(1.0);
        if err > worst {
            worst = err;
            worst_index = i;
        }
    }
    (worst, worst_index)
}

/// Compares analytic gradients against central differences of `loss_fn`.
///
/// `params` pairs each parameter name with its current value; `analytic`
/// holds the corresponding gradient buffers in the same order. `loss_fn`
/// receives a full parameter vector and returns the scalar loss.
pub fn grad_check<F>(
    params: &[(String, Tensor)],
    analytic: &[Vec<f64>],
    mut loss_fn: F,
    tolerance: f64,
) -> Result<GradCheckReport, TensorError>
where
    F: FnMut(&[(String, Tensor)]) -> Result<f64, TensorError>,
{
    assert_eq!(
        params.len(),
        analytic.len(),
        "one gradient buffer per parameter"
    );

    let first = loss_fn(params)?;
    let second = loss_fn(params)?;
    if first.to_bits() != second.to_bits() {
        return Err(TensorError::NonDeterministicClosure { first, second });
    }

    let mut entries = Vec::with_capacity(params.len());
    let mut work: Vec<(String, Tensor)> = params.to_vec();
    for (pi, (name, tensor)) in params.iter().enumerate() {
        let mut numeric = vec![0.0; tensor.len()];
        for j in 0..tensor.len() {
            let original = tensor.data()[j];
            work[pi].1.data_mut()[j] = original + FD_STEP;
            let plus = loss_fn(&work)?;
            work[pi].1.data_mut()[j] = original - FD_STEP;
            let minus = loss_fn(&work)?;
            work[pi].1.data_mut()[j] = original;
            numeric[j] = (plus - minus) / (2.0 * FD_STEP);
        }
        let (max_rel_err, worst_index) = max_rel_err(&analytic[pi], &numeric);
        entries.push(GradCheckEntry {
            name: name.clone(),
            max_rel_err,
            worst_index,
        });
    }
    Ok(GradCheckReport { tolerance, entries })
}
