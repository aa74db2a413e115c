//! Class-weighted binary cross-entropy.
//!
//! Each instance has `p` positives and `n - p` negatives, so positives are
//! weighted by `(n - p) / p`. A batch loss is the mean of the per-vertex
//! terms over every vertex of every instance in the batch.

use crate::error::{Error, Result};

/// Lower/upper clamp applied to probabilities before the loss during training.
pub const PROB_CLAMP: f64 = 1e-12;

pub fn class_weight(n: usize, p: usize) -> Result<f64> {
    if p < 1 || p > n {
        return Err(Error::InvalidP { n, p });
    }
    Ok((n - p) as f64 / p as f64)
}

fn check(probs: &[f64], labels: &[u8]) -> Result<()> {
    if probs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: probs.len(),
            got: labels.len(),
        });
    }
    match probs.iter().position(|&q| !(q > 0.0 && q < 1.0)) {
        Some(index) => Err(Error::ProbabilityOutOfRange {
            index,
            value: probs[index],
        }),
        None => Ok(()),
    }
}

fn term_sum(probs: &[f64], labels: &[u8], w: f64) -> f64 {
    probs
        .iter()
        .zip(labels)
        .map(|(&q, &y)| {
            let y = f64::from(y);
            -(w * y * q.ln() + (1.0 - y) * (1.0 - q).ln())
        })
        .sum()
}

/// Weighted cross-entropy of one instance, averaged over its vertices.
/// Probabilities must lie strictly inside `(0, 1)`.
pub fn loss(probs: &[f64], labels: &[u8], p: usize) -> Result<f64> {
    check(probs, labels)?;
    let n = probs.len();
    let w = class_weight(n, p)?;
    Ok(term_sum(probs, labels, w) / n as f64)
}

/// Clamps into `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub fn clamp_probs(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .map(|&q| q.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
        .collect()
}

/// Running per-vertex mean over a mini-batch.
#[derive(Debug, Clone, Copy, Default)]
pub struct BatchLoss {
    sum: f64,
    vertices: usize,
}

impl BatchLoss {
    pub fn add(&mut self, probs: &[f64], labels: &[u8], p: usize) -> Result<()> {
        check(probs, labels)?;
        let w = class_weight(probs.len(), p)?;
        self.sum += term_sum(probs, labels, w);
        self.vertices += probs.len();
        Ok(())
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.vertices as f64
    }
}

/// Loss of the constant 0.5 predictor: `((n-p)/p · p + (n-p)) · ln 2 / n`.
pub fn constant_half_loss(n: usize, p: usize) -> f64 {
    let w = (n - p) as f64 / p as f64;
    (w * p as f64 + (n - p) as f64) * std::f64::consts::LN_2 / n as f64
}
