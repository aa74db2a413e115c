//! Independent reference implementations shared by the integration tests.
//! They favour obviousness over speed and reuse nothing from the library
//! beyond its data accessors.

#![allow(dead_code)]

use pcgcn::{Instance, KnnGraph, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_instance(rng: &mut ChaCha8Rng, id: u64, n: usize, p: usize) -> Instance {
    let coords = (0..n)
        .map(|_| [rng.random_range(0..=100), rng.random_range(0..=100)])
        .collect();
    Instance::new(id, p, coords).unwrap()
}

/// Every `p`-subset of `0..n` in lexicographic order.
pub fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for v in start..=n - left {
            cur.push(v);
            go(v + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, p, &mut Vec::new(), &mut out);
    out
}

/// Max over vertices of the distance to the closest centre, by nested loops.
pub fn objective(inst: &Instance, centres: &[usize]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..inst.n() {
        let mut best = f64::INFINITY;
        for &j in centres {
            best = best.min(inst.dist(i, j));
        }
        worst = worst.max(best);
    }
    worst
}

/// Optimal objective over all `p`-subsets.
pub fn exhaustive_optimum(inst: &Instance) -> f64 {
    subsets(inst.n(), inst.p())
        .iter()
        .map(|s| objective(inst, s))
        .fold(f64::INFINITY, f64::min)
}

/// Whether some subset of at most `p` centres reaches objective `<= r`.
pub fn exhaustive_feasible(inst: &Instance, r: f64, p: usize) -> bool {
    (1..=p.min(inst.n())).any(|q| subsets(inst.n(), q).iter().any(|s| objective(inst, s) <= r))
}

/// k nearest neighbours from floating-point coordinates, sorted by
/// `(distance, index)`.
pub fn brute_knn(inst: &Instance, k: usize) -> Vec<Vec<usize>> {
    let c = inst.coords();
    (0..inst.n())
        .map(|i| {
            let mut row: Vec<(f64, usize)> = (0..inst.n())
                .filter(|&j| j != i)
                .map(|j| {
                    let dx = f64::from(c[i][0] - c[j][0]);
                    let dy = f64::from(c[i][1] - c[j][1]);
                    (dx.hypot(dy), j)
                })
                .collect();
            row.sort_by(|a, b| a.partial_cmp(b).unwrap());
            row.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn relu(z: f64) -> f64 {
    z.max(0.0)
}

/// Element `(r, c)` of a row-major matrix with `cols` columns.
fn at(m: &[f64], cols: usize, r: usize, c: usize) -> f64 {
    m[r * cols + c]
}

/// The network written out index by index.
pub fn reference_forward(params: &ModelParams, inst: &Instance, knn: &KnnGraph) -> Vec<f64> {
    let cfg = params.config();
    let (n, h) = (inst.n(), cfg.h);
    let a1 = params.a1();
    let b = params.b();
    let mut x: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let [cx, cy] = inst.coords()[i];
            (0..h)
                .map(|r| at(a1, 2, r, 0) * f64::from(cx) + at(a1, 2, r, 1) * f64::from(cy) + b[r])
                .collect()
        })
        .collect();
    for l in 0..cfg.layers {
        let [a2, a3, a4, a5] = params.conv(l);
        let mv =
            |m: &[f64], v: &[f64], r: usize| (0..h).map(|c| at(m, h, r, c) * v[c]).sum::<f64>();
        let mut next = x.clone();
        for i in 0..n {
            for r in 0..h {
                let mut u = mv(a2, &x[i], r);
                for &j in knn.neighbors(i) {
                    let eta = sig(mv(a4, &x[i], r) + mv(a5, &x[j], r));
                    u += eta * mv(a3, &x[j], r);
                }
                next[i][r] = x[i][r] + relu(u);
            }
        }
        x = next;
    }
    let [w1, b1, w2, b2, w3, b3] = params.mlp();
    x.iter()
        .map(|xi| {
            let h1: Vec<f64> = (0..h)
                .map(|r| relu((0..h).map(|c| at(w1, h, r, c) * xi[c]).sum::<f64>() + b1[r]))
                .collect();
            let h2: Vec<f64> = (0..h)
                .map(|r| relu((0..h).map(|c| at(w2, h, r, c) * h1[c]).sum::<f64>() + b2[r]))
                .collect();
            sig((0..h).map(|c| w3[c] * h2[c]).sum::<f64>() + b3[0])
        })
        .collect()
}

/// Weighted cross-entropy summed term by term and divided by `n`.
pub fn reference_loss(probs: &[f64], labels: &[u8], p: usize) -> f64 {
    let n = probs.len();
    let w = (n - p) as f64 / p as f64;
    let mut total = 0.0;
    for i in 0..n {
        if labels[i] == 1 {
            total -= w * probs[i].ln();
        } else {
            total -= (1.0 - probs[i]).ln();
        }
    }
    total / n as f64
}

/// Indices ordered by descending probability, ties by smaller index.
pub fn reference_ranking(probs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..probs.len()).collect();
    // stable sort keeps the smaller index first among equals
    idx.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap());
    idx
}

pub fn reference_naive(probs: &[f64], p: usize) -> Vec<usize> {
    let mut s: Vec<usize> = reference_ranking(probs).into_iter().take(p).collect();
    s.sort_unstable();
    s
}

/// Greedy decoding that recomputes the full objective for every candidate.
pub fn reference_greedy(inst: &Instance, probs: &[f64], p: usize) -> Vec<usize> {
    let order = reference_ranking(probs);
    let mut chosen = vec![order[0]];
    for &v in &order[1..] {
        if chosen.len() == p {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(v);
        if objective(inst, &trial) < objective(inst, &chosen) {
            chosen = trial;
        }
    }
    for &v in &order {
        if chosen.len() == p {
            break;
        }
        if !chosen.contains(&v) {
            chosen.push(v);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Parameters drawn uniformly from `±scale`, with the coordinate weights
/// shrunk so embeddings stay O(1) on raw coordinates.
pub fn random_params(cfg: pcgcn::ModelConfig, seed: u64, scale: f64) -> ModelParams {
    let mut r = rng(seed);
    let mut params = ModelParams::zeros(cfg).unwrap();
    for v in params.as_mut_slice() {
        *v = r.random_range(-scale..scale);
    }
    let a1_len = params.a1().len();
    for v in &mut params.as_mut_slice()[..a1_len] {
        *v /= 100.0;
    }
    params
}

/// Labels with exactly `p` ones at random positions.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<u8> {
    let mut labels = vec![0u8; n];
    let mut placed = 0;
    while placed < p {
        let i = rng.random_range(0..n);
        if labels[i] == 0 {
            labels[i] = 1;
            placed += 1;
        }
    }
    labels
}

/// One randomized gradient-check case.
pub struct GradCase {
    pub params: ModelParams,
    pub inst: Instance,
    pub knn: KnnGraph,
    pub labels: Vec<u8>,
}

/// Small random network, instance and labelling: `n <= 6`, `h <= 4`, `L <= 2`.
pub fn grad_case(seed: u64) -> GradCase {
    let mut r = rng(seed);
    let n = r.random_range(2..=6);
    let p = r.random_range(1..n);
    let h = r.random_range(1..=4);
    let layers = r.random_range(1..=2);
    let k = r.random_range(1..=3);
    let cfg = pcgcn::ModelConfig::new(h, layers, k).unwrap();
    let inst = random_instance(&mut r, seed, n, p);
    let knn = pcgcn::build_knn(&inst, k).unwrap();
    let labels = random_labels(&mut r, n, p);
    GradCase {
        params: random_params(cfg, seed ^ 0x5eed, 0.5),
        inst,
        knn,
        labels,
    }
}

pub fn case_loss(case: &GradCase, params: &ModelParams) -> f64 {
    let probs = pcgcn::predict(params, &case.inst, &case.knn).unwrap();
    reference_loss(&probs, &case.labels, case.inst.p())
}

/// Central differences of the loss for every parameter.
pub fn finite_difference(case: &GradCase, step: f64) -> Vec<f64> {
    let mut work = case.params.clone();
    (0..work.param_count())
        .map(|i| {
            let orig = work.as_slice()[i];
            work.as_mut_slice()[i] = orig + step;
            let up = case_loss(case, &work);
            work.as_mut_slice()[i] = orig - step;
            let down = case_loss(case, &work);
            work.as_mut_slice()[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}
