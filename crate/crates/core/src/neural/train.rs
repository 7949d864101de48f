//! Mini-batch training.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embedding::{feature_value, Vocabulary};
use super::network::{Gradients, NetworkParams};
use super::optim::{Adam, AdamConfig};
use super::Feature;
use crate::dpath::DepPath;
use crate::error::{Error, Result};

/// A labelled path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub path: DepPath,
    pub class: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Keep word embeddings fixed.
    pub freeze_word: bool,
    /// Samples per parallel work unit; part of the reduction order.
    pub chunk_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            dropout: 0.5,
            adam: AdamConfig::default(),
            seed: 0,
            freeze_word: false,
            chunk_size: 8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.batch_size == 0 || self.chunk_size == 0 {
            return Err(Error::Config("batch and chunk sizes must be positive".into()));
        }
        let a = &self.adam;
        if !(a.lr > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.eps > 0.0) {
            return Err(Error::Config("ADAM settings out of range".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training loss, measured with dropout active.
    pub loss: f64,
    /// Fraction of training samples whose argmax was the gold class.
    pub accuracy: f64,
    /// Wall time of the epoch; logged but not persisted.
    #[serde(skip)]
    pub elapsed_ms: u128,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

/// Vocabularies over every feature value seen in `examples`, in first-seen
/// order after `UNK`.
pub fn build_vocabularies(examples: &[Example]) -> [Vocabulary; 4] {
    let mut vocabs: [Vocabulary; 4] = Default::default();
    for ex in examples {
        for node in &ex.path.nodes {
            for f in Feature::ALL {
                vocabs[f as usize].insert(&feature_value(node, f));
            }
        }
    }
    vocabs
}

/// RNG for the dropout masks of the `counter`-th sample seen in training.
fn sample_rng(seed: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(counter + 1);
    rng
}

/// Summed loss, correct count and summed gradients over one chunk.
fn chunk_gradients(
    params: &NetworkParams,
    chunk: &[(u64, &Example, usize)],
    dropout: f64,
    seed: u64,
) -> (f64, usize, Gradients) {
    let mut grads = Gradients::zeros(params);
    let mut loss = 0.0;
    let mut correct = 0;
    for &(counter, ex, target) in chunk {
        let mut rng = sample_rng(seed, counter);
        let cache = params.forward_dropout(&ex.path, dropout, &mut rng);
        if cache.predicted() == target {
            correct += 1;
        }
        let (l, g) = params.backward(&cache, target);
        loss += l;
        grads.add_assign(&g);
    }
    (loss, correct, grads)
}

/// Mean loss and gradients over a batch. `first_counter` numbers the first
/// sample for dropout seeding. Returns (mean loss, correct count, gradients).
pub fn batch_gradients(
    params: &NetworkParams,
    batch: &[(&Example, usize)],
    config: &TrainConfig,
    first_counter: u64,
) -> (f64, usize, Gradients) {
    let numbered: Vec<(u64, &Example, usize)> = batch
        .iter()
        .enumerate()
        .map(|(k, &(ex, target))| (first_counter + k as u64, ex, target))
        .collect();
    let partials: Vec<(f64, usize, Gradients)> = numbered
        .par_chunks(config.chunk_size)
        .map(|chunk| chunk_gradients(params, chunk, config.dropout, config.seed))
        .collect();
    let mut total = Gradients::zeros(params);
    let mut loss = 0.0;
    let mut correct = 0;
    for (l, c, g) in &partials {
        loss += l;
        correct += c;
        total.add_assign(g);
    }
    let n = batch.len().max(1) as f64;
    total.scale(1.0 / n);
    (loss / n, correct, total)
}

/// Trains `params` in place with shuffled mini-batches and ADAM.
pub fn train(params: &mut NetworkParams, examples: &[Example], config: &TrainConfig) -> Result<TrainLog> {
    if examples.is_empty() {
        return Err(Error::Argument("cannot train on an empty sample set".into()));
    }
    config.validate()?;
    let mut targets = Vec::with_capacity(examples.len());
    for ex in examples {
        let t = params
            .class_index(&ex.class)
            .ok_or_else(|| Error::Argument(format!("class '{}' is not an output of the network", ex.class)))?;
        targets.push(t);
    }

    let mut adam = Adam::new(params, config.adam);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut counter = 0u64;
    let mut log = TrainLog::default();

    for epoch in 1..=config.epochs {
        let start = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for batch_ids in order.chunks(config.batch_size) {
            let batch: Vec<(&Example, usize)> = batch_ids.iter().map(|&i| (&examples[i], targets[i])).collect();
            let (loss, ok, grads) = batch_gradients(params, &batch, config, counter);
            counter += batch.len() as u64;
            loss_sum += loss * batch.len() as f64;
            correct += ok;
            adam.step(params, &grads, config.freeze_word);
        }
        let stats = EpochStats {
            epoch,
            loss: loss_sum / examples.len() as f64,
            accuracy: correct as f64 / examples.len() as f64,
            elapsed_ms: start.elapsed().as_millis(),
        };
        log::info!(
            "stage=train epoch={} loss={:.6} accuracy={:.4} elapsed_ms={}",
            stats.epoch,
            stats.loss,
            stats.accuracy,
            stats.elapsed_ms
        );
        log.epochs.push(stats);
    }
    Ok(log)
}

/// Mean loss and accuracy without dropout. Unknown classes are an error.
pub fn evaluate(params: &NetworkParams, examples: &[Example]) -> Result<(f64, f64)> {
    if examples.is_empty() {
        return Err(Error::Argument("cannot evaluate an empty sample set".into()));
    }
    let results: Vec<Result<(f64, bool)>> = examples
        .par_iter()
        .map(|ex| {
            let target = params
                .class_index(&ex.class)
                .ok_or_else(|| Error::Argument(format!("unknown class '{}'", ex.class)))?;
            let cache = params.forward(&ex.path);
            Ok((super::network::cross_entropy(&cache.logits, target), cache.predicted() == target))
        })
        .collect();
    let mut loss = 0.0;
    let mut correct = 0;
    for r in results {
        let (l, ok) = r?;
        loss += l;
        correct += ok as usize;
    }
    let n = examples.len() as f64;
    Ok((loss / n, correct as f64 / n))
}
