//! Aggregator training loop and pool prediction.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AttentionRnnModel, RnnCellKind};
use crate::error::{Error, Result};
use crate::optim::{Adam, AdamConfig};

/// Loss above this value aborts training as divergence.
const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct AggTrainingConfig {
    pub cell: RnnCellKind,
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for AggTrainingConfig {
    fn default() -> Self {
        AggTrainingConfig {
            cell: RnnCellKind::Gru,
            hidden: 128,
            lr: 1e-4,
            epochs: 10,
            batch_size: 8,
            seed: 0,
        }
    }
}

/// A training example: the pooled relevance sequence and its binary label.
pub type LabeledSequence = (Vec<Vec<f64>>, u8);

/// Per-candidate prediction for one query pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Prediction {
    pub cand_id: String,
    pub probability: f64,
    /// `probability > 0.5`, strict.
    pub relevant: bool,
}

/// Train an attention RNN on labeled sequences. Deterministic per seed.
/// When `checkpoint_dir` is set, a checkpoint is written after every epoch.
/// When `validation` is given, the returned model is the epoch snapshot with
/// the best validation F1 (ties keep the later epoch's predecessor — the
/// first best encountered); otherwise the final epoch is returned.
pub fn train_aggregator(
    dataset: &[LabeledSequence],
    cfg: &AggTrainingConfig,
    checkpoint_dir: Option<&Path>,
    validation: Option<&[LabeledSequence]>,
) -> Result<(AttentionRnnModel, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(Error::Config("aggregator dataset must be nonempty".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch_size must be >= 1".into()));
    }
    if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) {
        return Err(Error::Config(format!("lr must be finite and >= 0, got {}", cfg.lr)));
    }
    let input_dim = dataset[0].0.first().map(|r| r.len()).unwrap_or(0);
    let mut model = AttentionRnnModel::init(cfg.cell, input_dim, cfg.hidden, cfg.seed)?;
    let mut adam = Adam::new(model.n_params(), AdamConfig::with_lr(cfg.lr))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Vec<f64>)> = None;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&[Vec<f64>], u8)> = chunk
                .iter()
                .map(|&i| (dataset[i].0.as_slice(), dataset[i].1))
                .collect();
            let (loss, grads) = model.loss_and_gradients(&batch)?;
            if loss > DIVERGENCE_LIMIT {
                return Err(Error::Numeric(format!(
                    "training diverged at epoch {epoch} (loss {loss:.3e})"
                )));
            }
            loss_sum += loss * batch.len() as f64;
            adam.step(&mut model.params, &grads)?;
        }
        curve.push(loss_sum / dataset.len() as f64);
        if let Some(dir) = checkpoint_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            model.save(&dir.join(format!("aggregator-epoch{epoch:03}.ckpt")))?;
        }
        if let Some(val) = validation {
            let f1 = training_f1(&model, val)?;
            let better = best.as_ref().map_or(true, |(b, _)| f1 > *b);
            if better {
                best = Some((f1, model.params().to_vec()));
            }
        }
    }
    if let Some((_, params)) = best {
        model.params_mut().copy_from_slice(&params);
    }
    Ok((model, curve))
}

/// Positive-class F1 of thresholded predictions over labeled sequences.
pub fn training_f1(model: &AttentionRnnModel, dataset: &[LabeledSequence]) -> Result<f64> {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (sequence, label) in dataset {
        let predicted = model.forward(sequence)?.probability > 0.5;
        match (predicted, *label == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(crate::pair_encoder::prf(tp, fp, fn_).f1)
}

/// Classify the encoded candidates of one query pool. Candidates that were
/// never encoded are not in `sequences` and are decided irrelevant by the
/// caller (see the evaluation module).
pub fn predict_relevance(
    model: &AttentionRnnModel,
    sequences: &[(String, Vec<Vec<f64>>)],
) -> Result<Vec<Prediction>> {
    sequences
        .iter()
        .map(|(cand_id, sequence)| {
            let probability = model.forward(sequence)?.probability;
            Ok(Prediction {
                cand_id: cand_id.clone(),
                probability,
                relevant: probability > 0.5,
            })
        })
        .collect()
}
