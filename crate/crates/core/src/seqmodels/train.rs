use serde::{Deserialize, Serialize};

use super::model::{normalize_document, Model};
use crate::baselines::argmax;
use crate::corpus::seeded_partition;
use crate::nncore::{RmsPropState, Tensor};
use crate::preprocess::EncodedDocument;
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: RmsPropState,
    pub seed: u64,
    /// Epochs without a validation-accuracy improvement before stopping.
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 30,
            optimizer: RmsPropState::new(0.005, 0.9, 1e-8).expect("valid"),
            seed: 0,
            patience: 3,
            validation_fraction: 0.15,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.patience == 0 {
            return Err(Error::invalid("batch_size, epochs and patience must be positive"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::invalid(format!("validation fraction {} is outside [0, 1)", self.validation_fraction)));
        }
        RmsPropState::new(self.optimizer.learning_rate, self.optimizer.decay, self.optimizer.epsilon).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training cross-entropy over the epoch's batches (per document).
    pub train_loss: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (1-based).
    pub best_epoch: usize,
    pub train_size: usize,
    pub validation_size: usize,
}

/// Groups document indices into batches of similar sentence count. The
/// grouping is randomized by `rng` but otherwise deterministic.
pub fn bucketed_batches(sentence_counts: &[usize], batch_size: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..sentence_counts.len()).collect();
    rng.shuffle(&mut order);
    order.sort_by_key(|&i| sentence_counts[i]);
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect();
    rng.shuffle(&mut batches);
    batches
}

const EVAL_BATCH: usize = 64;

/// Eval-mode probabilities for many documents, batched by sentence count;
/// rows follow the input order.
pub fn predict_many(model: &Model, docs: &[EncodedDocument]) -> Result<Vec<Vec<f64>>> {
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.sort_by_key(|&i| normalize_document(&docs[i]).len());
    let mut out = vec![Vec::new(); docs.len()];
    for chunk in order.chunks(EVAL_BATCH) {
        let batch: Vec<EncodedDocument> = chunk.iter().map(|&i| docs[i].clone()).collect();
        let probs: Tensor = model.predict_proba(&batch)?;
        for (row, &i) in chunk.iter().enumerate() {
            out[i] = probs.row(row).to_vec();
        }
    }
    Ok(out)
}

pub fn accuracy_on(model: &Model, data: &[(EncodedDocument, usize)]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("accuracy over an empty set"));
    }
    let docs: Vec<EncodedDocument> = data.iter().map(|(d, _)| d.clone()).collect();
    let probs = predict_many(model, &docs)?;
    let correct = probs.iter().zip(data).filter(|(p, (_, y))| argmax(p) == *y).count();
    Ok(correct as f64 / data.len() as f64)
}

/// Mini-batch RMSprop on cross-entropy with early stopping.
///
/// A `validation_fraction` share of `data` (seeded) is held out; training
/// stops after `patience` epochs without a validation-accuracy gain and the
/// best epoch's parameters are restored. Sets too small to hold out a
/// document train on everything for the full epoch budget.
pub fn train(model: &mut Model, data: &[(EncodedDocument, usize)], config: &TrainConfig) -> Result<TrainHistory> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let classes = model.num_classes();
    if let Some((_, bad)) = data.iter().find(|(_, y)| *y >= classes) {
        return Err(Error::invalid(format!("class id {bad} >= number of classes {classes}")));
    }
    let normalized: Vec<(EncodedDocument, usize)> = data.iter().map(|(d, y)| (normalize_document(d), *y)).collect();
    let held = (config.validation_fraction * data.len() as f64).round() as usize;
    let (train_set, validation) = if held >= 1 && held < data.len() {
        seeded_partition(&normalized, config.validation_fraction, config.seed)?
    } else {
        (normalized, Vec::new())
    };

    let mut optimizer = RmsPropState::new(config.optimizer.learning_rate, config.optimizer.decay, config.optimizer.epsilon)?;
    for p in model.parameters_mut() {
        p.zero_grad();
    }
    let counts: Vec<usize> = train_set.iter().map(|(d, _)| d.len()).collect();
    let mut rng = Rng::derive(config.seed, 1);
    let mut records = Vec::new();
    let mut best: Option<(f64, usize, Vec<Tensor>)> = None;
    let mut stale = 0;

    for epoch in 1..=config.epochs {
        let mut loss_sum = 0.0;
        for (bi, batch) in bucketed_batches(&counts, config.batch_size, &mut rng).into_iter().enumerate() {
            let docs: Vec<EncodedDocument> = batch.iter().map(|&i| train_set[i].0.clone()).collect();
            let targets: Vec<usize> = batch.iter().map(|&i| train_set[i].1).collect();
            let loss = model.loss_and_backward(&docs, &targets, rng.next_u64())?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}, batch {}", bi + 1)));
            }
            optimizer
                .step(&mut model.trainable_parameters_mut())
                .map_err(|e| Error::NonFinite(format!("{e} at epoch {epoch}, batch {}", bi + 1)))?;
            loss_sum += loss * batch.len() as f64;
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let validation_accuracy = if validation.is_empty() {
            None
        } else {
            Some(accuracy_on(model, &validation)?)
        };
        log::debug!("epoch {epoch}: loss {train_loss:.5}, validation accuracy {validation_accuracy:?}");
        records.push(EpochRecord {
            epoch,
            train_loss,
            validation_accuracy,
        });
        let Some(acc) = validation_accuracy else { continue };
        if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
            let snapshot = model.parameters().iter().map(|p| p.value.clone()).collect();
            best = Some((acc, epoch, snapshot));
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }

    let best_epoch = match best {
        Some((_, epoch, snapshot)) => {
            for (p, v) in model.parameters_mut().into_iter().zip(snapshot) {
                p.value = v;
            }
            epoch
        }
        None => records.len(),
    };
    Ok(TrainHistory {
        epochs: records,
        best_epoch,
        train_size: train_set.len(),
        validation_size: validation.len(),
    })
}
