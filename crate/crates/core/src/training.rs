//! Mini-batch training with Adam and per-batch loss logging.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adam::{adam_step, AdamState};
use crate::dataset::LabeledSample;
use crate::error::{Error, Result};
use crate::gcn::{accumulate_backward, forward};
use crate::instance::{build_knn, KnnGraph};
use crate::loss::{clamp_probs, BatchLoss};
use crate::model::{init_params, ModelConfig, ModelParams, Setting};

/// Instances per gradient-accumulation chunk. Chunks are reduced in index
/// order, so the summed gradient does not depend on the thread count.
const GRAD_CHUNK: usize = 8;

/// Mixed into the base seed for the epoch shuffles so they do not share a
/// stream with parameter initialisation.
const SHUFFLE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub setting: Option<Setting>,
    pub model: ModelConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Full-scale defaults for a preset: batch 1000, lr 1e-4, 50 or 20 epochs.
    pub fn full(setting: Setting, seed: u64) -> Self {
        TrainConfig {
            setting: Some(setting),
            model: setting.config(),
            batch_size: 1000,
            epochs: setting.default_epochs(),
            lr: 1e-4,
            seed,
        }
    }

    /// Laptop-scale defaults: batch 100, 5 epochs, lr 1e-4.
    pub fn desk(setting: Setting, seed: u64) -> Self {
        TrainConfig {
            batch_size: 100,
            epochs: 5,
            ..Self::full(setting, seed)
        }
    }

    pub fn custom(
        model: ModelConfig,
        batch_size: usize,
        epochs: usize,
        lr: f64,
        seed: u64,
    ) -> Self {
        TrainConfig {
            setting: None,
            model,
            batch_size,
            epochs,
            lr,
            seed,
        }
    }

    fn validate(&self, train_count: usize) -> Result<()> {
        self.model.validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if self.batch_size > train_count {
            return Err(Error::InvalidConfig(format!(
                "batch size {} exceeds the {train_count} training samples",
                self.batch_size
            )));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "invalid learning rate {}",
                self.lr
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub batch: usize,
    pub seconds: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossHistory {
    pub records: Vec<LossRecord>,
}

impl LossHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mean batch loss of one epoch.
    pub fn epoch_mean(&self, epoch: usize) -> Option<f64> {
        let losses: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.epoch == epoch)
            .map(|r| r.loss)
            .collect();
        (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64)
    }

    pub fn final_epoch_mean(&self) -> Option<f64> {
        self.records.last().and_then(|r| self.epoch_mean(r.epoch))
    }

    /// CSV with columns `epoch,batch,seconds,loss`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "batch", "seconds", "loss"])?;
        for r in &self.records {
            w.write_record([
                r.epoch.to_string(),
                r.batch.to_string(),
                format!("{:.6}", r.seconds),
                r.loss.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trains from a fresh initialisation seeded with `cfg.seed`.
pub fn train(cfg: &TrainConfig, dataset: &[LabeledSample]) -> Result<(ModelParams, LossHistory)> {
    let params = init_params(cfg.model, cfg.seed)?;
    train_from(cfg, params, dataset)
}

/// Trains starting from the given parameters.
pub fn train_from(
    cfg: &TrainConfig,
    mut params: ModelParams,
    dataset: &[LabeledSample],
) -> Result<(ModelParams, LossHistory)> {
    cfg.validate(dataset.len())?;
    if *params.config() != cfg.model {
        return Err(Error::InvalidConfig(
            "parameters do not match the model configuration".into(),
        ));
    }
    let graphs: Vec<KnnGraph> = dataset
        .par_iter()
        .map(|s| build_knn(&s.instance, cfg.model.k))
        .collect::<Result<_>>()?;

    let mut adam = AdamState::for_params(&params);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_SALT);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let batches = dataset.len() / cfg.batch_size;
    let mut history = LossHistory::default();
    let start = Instant::now();
    let mut step = 0u64;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in 0..batches {
            let idx = &order[batch * cfg.batch_size..(batch + 1) * cfg.batch_size];
            let (grads, loss) = batch_gradient(&params, dataset, &graphs, idx)?;
            step += 1;
            adam_step(&mut params, &grads, &mut adam, step, cfg.lr)?;
            history.records.push(LossRecord {
                epoch,
                batch,
                seconds: start.elapsed().as_secs_f64(),
                loss,
            });
        }
    }
    Ok((params, history))
}

/// Gradient and value of the per-vertex mean loss over the samples `idx`.
pub fn batch_gradient(
    params: &ModelParams,
    dataset: &[LabeledSample],
    graphs: &[KnnGraph],
    idx: &[usize],
) -> Result<(ModelParams, f64)> {
    let total: usize = idx.iter().map(|&i| dataset[i].instance.n()).sum();
    let scale = 1.0 / total as f64;
    let partials: Vec<(ModelParams, BatchLoss)> = idx
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut g = ModelParams::zeros(*params.config())?;
            let mut loss = BatchLoss::default();
            for &i in chunk {
                let s = &dataset[i];
                let trace = forward(params, &s.instance, &graphs[i])?;
                loss.add(&clamp_probs(trace.probs()), &s.labels, s.instance.p())?;
                accumulate_backward(params, &trace, &s.labels, s.instance.p(), scale, &mut g)?;
            }
            Ok((g, loss))
        })
        .collect::<Result<_>>()?;

    let mut grads = ModelParams::zeros(*params.config())?;
    let mut sum = 0.0;
    for (g, l) in &partials {
        grads.add_scaled(g, 1.0);
        sum += l.mean() * l.vertices() as f64;
    }
    Ok((grads, sum / total as f64))
}

/// Mean loss of `params` over a whole dataset (no update).
pub fn dataset_loss(params: &ModelParams, dataset: &[LabeledSample]) -> Result<f64> {
    let parts: Vec<BatchLoss> = dataset
        .par_iter()
        .map(|s| {
            let knn = build_knn(&s.instance, params.config().k)?;
            let trace = forward(params, &s.instance, &knn)?;
            let mut l = BatchLoss::default();
            l.add(&clamp_probs(trace.probs()), &s.labels, s.instance.p())?;
            Ok(l)
        })
        .collect::<Result<_>>()?;
    let (sum, count) = parts.iter().fold((0.0, 0usize), |(s, c), l| {
        (s + l.mean() * l.vertices() as f64, c + l.vertices())
    });
    Ok(sum / count as f64)
}
