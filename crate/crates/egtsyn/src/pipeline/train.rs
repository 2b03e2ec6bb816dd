//! The training loop: Adam over shuffled mini-batches of drug pairs.
//!
//! Each training record enters the stream twice, once per pair order, so
//! the network sees both `(a, b)` and `(b, a)` with the same label. One
//! seeded generator drives both the per-epoch shuffle and the dropout
//! masks, making a run a pure function of its inputs and seed.

use super::{DatasetBundle, PipelineError, SynergyRecord};
use crate::model::{Model, PairItem};
use crate::molgraph::DualGraph;
use crate::tensor::AdamHyperParams;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Knobs for one training run.
#[derive(Debug, Clone)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub hp: AdamHyperParams,
    /// L2 penalty scale: the loss adds `(2 / delta) * sum(theta^2)`, so
    /// smaller delta means stronger regularization. `None` disables it.
    pub l2_delta: Option<f64>,
    /// Seeds the mini-batch shuffle and dropout masks.
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            epochs: 300,
            batch_size: 128,
            hp: AdamHyperParams::default(),
            l2_delta: Some(1e4),
            seed: 0,
        }
    }
}

/// Losses recorded after one epoch. `val_loss` is absent when no
/// validation indices were supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStat {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

/// What a finished run reports: per-epoch losses plus the last train loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub history: Vec<EpochStat>,
    pub final_loss: f64,
}

/// Renders history as `epoch,train_loss,val_loss` lines under a header.
pub fn render_history(history: &[EpochStat]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for stat in history {
        match stat.val_loss {
            Some(v) => writeln!(out, "{},{},{}", stat.epoch, stat.train_loss, v),
            None => writeln!(out, "{},{},", stat.epoch, stat.train_loss),
        }
        .expect("string writes cannot fail");
    }
    out
}

fn check_labeled(
    records: &[SynergyRecord],
    indices: &[usize],
    role: &'static str,
) -> Result<(), PipelineError> {
    for &i in indices {
        let record = records
            .get(i)
            .ok_or_else(|| PipelineError::Data(format!("{role} index {i} out of range")))?;
        if record.label.is_none() {
            return Err(PipelineError::Data(format!(
                "{role} record {i} has no label; run apply_labels first"
            )));
        }
    }
    Ok(())
}

fn item<'a>(
    record: &SynergyRecord,
    swap: bool,
    graphs: &'a BTreeMap<String, DualGraph>,
    bundle: &'a DatasetBundle,
) -> Result<PairItem<'a>, PipelineError> {
    let (a, b) = if swap {
        (&record.drug_b, &record.drug_a)
    } else {
        (&record.drug_a, &record.drug_b)
    };
    Ok(PairItem {
        drug_a: &graphs[a.as_str()],
        drug_b: &graphs[b.as_str()],
        cell: bundle.expression(&record.cell_line)?,
        label: f64::from(record.label.expect("labels checked up front")),
    })
}

/// Fits the model on the training indices, minimizing mean binary
/// cross-entropy plus the L2 penalty with Adam. Records one
/// [`EpochStat`] per epoch; when validation indices are given, each
/// epoch also logs the dropout-free validation loss. A non-finite batch
/// loss aborts with [`PipelineError::NonFiniteLoss`] before the update
/// is applied.
pub fn train(
    model: &mut Model,
    bundle: &DatasetBundle,
    records: &[SynergyRecord],
    train_indices: &[usize],
    val_indices: &[usize],
    settings: &TrainSettings,
) -> Result<TrainResult, PipelineError> {
    if train_indices.is_empty() {
        return Err(PipelineError::Parameter {
            name: "train_indices",
            reason: "training set must not be empty".to_string(),
        });
    }
    if settings.epochs == 0 {
        return Err(PipelineError::Parameter {
            name: "epochs",
            reason: "must be at least 1".to_string(),
        });
    }
    if settings.batch_size == 0 {
        return Err(PipelineError::Parameter {
            name: "batch_size",
            reason: "must be at least 1".to_string(),
        });
    }
    check_labeled(records, train_indices, "train")?;
    check_labeled(records, val_indices, "validation")?;
    let mut used: Vec<usize> = train_indices.to_vec();
    used.extend_from_slice(val_indices);
    let graphs = bundle.drug_graphs(records, &used)?;
    let val_items: Vec<PairItem> = val_indices
        .iter()
        .map(|&i| item(&records[i], false, &graphs, bundle))
        .collect::<Result<_, _>>()?;

    let mut stream: Vec<(usize, bool)> = train_indices
        .iter()
        .flat_map(|&i| [(i, false), (i, true)])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut state = model.adam_state();
    let mut history = Vec::with_capacity(settings.epochs);

    for epoch in 1..=settings.epochs {
        stream.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in stream.chunks(settings.batch_size) {
            let items: Vec<PairItem> = chunk
                .iter()
                .map(|&(i, swap)| item(&records[i], swap, &graphs, bundle))
                .collect::<Result<_, _>>()?;
            model.zero_grads();
            let loss = model.batch_gradients(&items, settings.l2_delta, &mut rng)?;
            if !loss.is_finite() {
                return Err(PipelineError::NonFiniteLoss {
                    epoch,
                    batch: batches,
                });
            }
            model.apply_adam(&mut state, &settings.hp);
            loss_sum += loss;
            batches += 1;
        }
        let train_loss = loss_sum / batches as f64;
        let val_loss = if val_items.is_empty() {
            None
        } else {
            Some(model.eval_loss(&val_items)?)
        };
        history.push(EpochStat {
            epoch,
            train_loss,
            val_loss,
        });
    }

    let final_loss = history.last().map(|s| s.train_loss).unwrap_or(f64::NAN);
    Ok(TrainResult {
        history,
        final_loss,
    })
}
