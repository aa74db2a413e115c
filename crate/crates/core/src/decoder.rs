//! Turning per-vertex probabilities into feasible p-center solutions.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{Instance, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Naive,
    Greedy,
    Baseline,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Naive => "naive",
            Strategy::Greedy => "greedy",
            Strategy::Baseline => "baseline",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub solution: Solution,
    pub objective: f64,
    pub strategy: Strategy,
}

/// Vertex indices by descending probability, ties by smaller index.
pub fn rank_by_probability(probs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

fn check(inst: &Instance, probs: &[f64], p: usize) -> Result<()> {
    let n = inst.n();
    if probs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: probs.len(),
        });
    }
    if p < 1 || p > n {
        return Err(Error::InvalidP { n, p });
    }
    Ok(())
}

fn finish(inst: &Instance, solution: Solution, strategy: Strategy) -> Result<DecodeResult> {
    let objective = inst.objective(&solution)?;
    Ok(DecodeResult {
        solution,
        objective,
        strategy,
    })
}

/// The `p` most probable vertices.
pub fn naive_decode(inst: &Instance, probs: &[f64], p: usize) -> Result<DecodeResult> {
    check(inst, probs, p)?;
    let order = rank_by_probability(probs);
    finish(
        inst,
        Solution::new(order.into_iter().take(p)),
        Strategy::Naive,
    )
}

/// Single pass over the vertices in descending probability. The first
/// vertex is always taken; later ones only if they strictly lower the
/// current objective. If fewer than `p` were taken, the most probable
/// unused vertices fill the remaining slots.
pub fn greedy_decode(inst: &Instance, probs: &[f64], p: usize) -> Result<DecodeResult> {
    check(inst, probs, p)?;
    greedy_pass(inst, probs, p, Strategy::Greedy)
}

fn greedy_pass(
    inst: &Instance,
    probs: &[f64],
    p: usize,
    strategy: Strategy,
) -> Result<DecodeResult> {
    let n = inst.n();
    let order = rank_by_probability(probs);
    let first = order[0];
    let mut chosen = Solution::new([first]);
    // distance from every vertex to its closest chosen centre
    let mut nearest = inst.dist_row(first).to_vec();
    let mut current = nearest.iter().copied().fold(0.0, f64::max);

    for &v in &order[1..] {
        if chosen.len() == p {
            break;
        }
        let row = inst.dist_row(v);
        let candidate = (0..n).map(|i| nearest[i].min(row[i])).fold(0.0, f64::max);
        if candidate < current {
            chosen.insert(v);
            for (d, &r) in nearest.iter_mut().zip(row) {
                *d = d.min(r);
            }
            current = candidate;
        }
    }
    for &v in &order {
        if chosen.len() == p {
            break;
        }
        chosen.insert(v);
    }
    finish(inst, chosen, strategy)
}

/// Greedy decoding driven by uniform `[0, 1)` noise instead of model output.
pub fn baseline_decode(inst: &Instance, p: usize, seed: u64) -> Result<DecodeResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs: Vec<f64> = (0..inst.n()).map(|_| rng.random::<f64>()).collect();
    check(inst, &probs, p)?;
    greedy_pass(inst, &probs, p, Strategy::Baseline)
}

/// Relative excess over the optimum in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gap {
    Percent(f64),
    /// `z* = 0` but `z > 0`.
    Infinite,
}

impl Gap {
    pub fn value(self) -> f64 {
        match self {
            Gap::Percent(v) => v,
            Gap::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Gap::Percent(_))
    }
}

impl fmt::Display for Gap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gap::Percent(v) => write!(f, "{v}"),
            Gap::Infinite => f.write_str("inf"),
        }
    }
}

pub fn optimality_gap(z: f64, z_star: f64) -> Gap {
    if z_star == 0.0 {
        if z == 0.0 {
            Gap::Percent(0.0)
        } else {
            Gap::Infinite
        }
    } else {
        Gap::Percent(100.0 * (z - z_star) / z_star)
    }
}
