//! Forward and reverse passes of the residual gated graph convolutional
//! network.
//!
//! ```text
//! x⁰_i     = A1·c_i + b                       (c_i = raw integer coordinates)
//! η_ij     = σ(A4·xˡ_i + A5·xˡ_j)             for j ∈ N(i)
//! xˡ⁺¹_i   = xˡ_i + ReLU(A2·xˡ_i + Σ_j η_ij ⊙ A3·xˡ_j)
//! p_i      = σ(W3·ReLU(W2·ReLU(W1·xᴸ_i + b1) + b2) + b3)
//! ```

use crate::error::{Error, Result};
use crate::instance::{Instance, KnnGraph};
use crate::linalg::{matvec_add, matvec_t_add, outer_add, relu, sigmoid};
use crate::loss::class_weight;
use crate::model::{Gradients, ModelParams};

/// Activations of one conv layer kept for the backward pass.
#[derive(Debug, Clone)]
struct ConvTrace {
    /// A3·xˡ_j for every vertex, `n × h`.
    a3x: Vec<f64>,
    /// Gate values η_ij laid out edge by edge in neighbour-list order.
    gates: Vec<f64>,
    /// Argument of the ReLU, `n × h`.
    pre: Vec<f64>,
}

/// Everything the backward pass needs from a forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    n: usize,
    h: usize,
    coords: Vec<[f64; 2]>,
    nbrs: Vec<Vec<usize>>,
    /// x⁰ … xᴸ, each `n × h`.
    xs: Vec<Vec<f64>>,
    convs: Vec<ConvTrace>,
    z1: Vec<f64>,
    z2: Vec<f64>,
    logits: Vec<f64>,
    probs: Vec<f64>,
}

impl ForwardTrace {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// Vertex embeddings after `layer` conv layers (`0` is the input
    /// transform), row-major `n × h`.
    pub fn embeddings(&self, layer: usize) -> &[f64] {
        &self.xs[layer]
    }

    /// Gate vector η_ij of layer `layer`, where `j` is the `slot`-th neighbour of `i`.
    pub fn gate(&self, layer: usize, i: usize, slot: usize) -> &[f64] {
        let offset: usize = self.nbrs[..i].iter().map(Vec::len).sum::<usize>() + slot;
        &self.convs[layer].gates[offset * self.h..(offset + 1) * self.h]
    }
}

pub fn forward(params: &ModelParams, inst: &Instance, knn: &KnnGraph) -> Result<ForwardTrace> {
    let cfg = params.config();
    if knn.k() != cfg.k {
        return Err(Error::KMismatch {
            model: cfg.k,
            graph: knn.k(),
        });
    }
    let n = inst.n();
    if knn.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: knn.len(),
        });
    }
    let h = cfg.h;
    let coords: Vec<[f64; 2]> = inst
        .coords()
        .iter()
        .map(|&[x, y]| [f64::from(x), f64::from(y)])
        .collect();
    let nbrs: Vec<Vec<usize>> = (0..n).map(|i| knn.neighbors(i).to_vec()).collect();

    let mut x0 = vec![0.0; n * h];
    for (i, c) in coords.iter().enumerate() {
        let xi = &mut x0[i * h..(i + 1) * h];
        xi.copy_from_slice(params.b());
        matvec_add(params.a1(), h, 2, c, xi);
    }

    let mut xs = vec![x0];
    let mut convs = Vec::with_capacity(cfg.layers);
    for l in 0..cfg.layers {
        let [a2, a3, a4, a5] = params.conv(l);
        let x = xs.last().expect("x⁰ present");
        let project = |m: &[f64]| {
            let mut out = vec![0.0; n * h];
            for i in 0..n {
                matvec_add(
                    m,
                    h,
                    h,
                    &x[i * h..(i + 1) * h],
                    &mut out[i * h..(i + 1) * h],
                );
            }
            out
        };
        let a2x = project(a2);
        let a3x = project(a3);
        let a4x = project(a4);
        let a5x = project(a5);

        let edges: usize = nbrs.iter().map(Vec::len).sum();
        let mut gates = Vec::with_capacity(edges * h);
        let mut pre = a2x;
        for i in 0..n {
            let g4 = &a4x[i * h..(i + 1) * h];
            let ui = &mut pre[i * h..(i + 1) * h];
            for &j in &nbrs[i] {
                let g5 = &a5x[j * h..(j + 1) * h];
                let cj = &a3x[j * h..(j + 1) * h];
                for d in 0..h {
                    let eta = sigmoid(g4[d] + g5[d]);
                    gates.push(eta);
                    ui[d] += eta * cj[d];
                }
            }
        }
        let next: Vec<f64> = x.iter().zip(&pre).map(|(&xv, &u)| xv + relu(u)).collect();
        xs.push(next);
        convs.push(ConvTrace { a3x, gates, pre });
    }

    let [w1, b1, w2, b2, w3, b3] = params.mlp();
    let xl = xs.last().expect("at least one layer");
    let mut z1 = vec![0.0; n * h];
    let mut z2 = vec![0.0; n * h];
    let mut logits = vec![0.0; n];
    let mut hidden = vec![0.0; h];
    for i in 0..n {
        let z1i = &mut z1[i * h..(i + 1) * h];
        z1i.copy_from_slice(b1);
        matvec_add(w1, h, h, &xl[i * h..(i + 1) * h], z1i);
        for (hv, &z) in hidden.iter_mut().zip(z1i.iter()) {
            *hv = relu(z);
        }
        let z2i = &mut z2[i * h..(i + 1) * h];
        z2i.copy_from_slice(b2);
        matvec_add(w2, h, h, &hidden, z2i);
        for (hv, &z) in hidden.iter_mut().zip(z2i.iter()) {
            *hv = relu(z);
        }
        let mut out = [b3[0]];
        matvec_add(w3, 1, h, &hidden, &mut out);
        logits[i] = out[0];
    }
    let probs = logits.iter().map(|&z| sigmoid(z)).collect();

    Ok(ForwardTrace {
        n,
        h,
        coords,
        nbrs,
        xs,
        convs,
        z1,
        z2,
        logits,
        probs,
    })
}

/// Convenience wrapper returning only the output probabilities.
pub fn predict(params: &ModelParams, inst: &Instance, knn: &KnnGraph) -> Result<Vec<f64>> {
    Ok(forward(params, inst, knn)?.probs)
}

/// Exact gradient of the per-instance loss (mean over the instance's `n`
/// vertices) with respect to every parameter.
pub fn backward(
    params: &ModelParams,
    trace: &ForwardTrace,
    labels: &[u8],
    p: usize,
) -> Result<Gradients> {
    let mut grads = ModelParams::zeros(*params.config())?;
    accumulate_backward(params, trace, labels, p, 1.0 / trace.n as f64, &mut grads)?;
    Ok(grads)
}

/// Adds `scale · ∂(Σ_i ℓ_i)/∂θ` to `grads`, where `ℓ_i` is the weighted
/// cross-entropy term of vertex `i`.
pub fn accumulate_backward(
    params: &ModelParams,
    trace: &ForwardTrace,
    labels: &[u8],
    p: usize,
    scale: f64,
    grads: &mut Gradients,
) -> Result<()> {
    let n = trace.n;
    let h = trace.h;
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    let w = class_weight(n, p)?;
    let layout = params.layout().clone();
    let g = grads.as_mut_slice();

    // ∂ℓ/∂z for σ-output z: (1 − y)·σ − w·y·(1 − σ)
    let dlogit: Vec<f64> = trace
        .probs
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            let y = f64::from(y);
            scale * ((1.0 - y) * s - w * y * (1.0 - s))
        })
        .collect();

    let [w1, _, w2, _, w3, _] = params.mlp();
    let xl = trace.xs.last().expect("xᴸ present");
    let mut dx = vec![0.0; n * h];
    let mut h1 = vec![0.0; h];
    let mut h2 = vec![0.0; h];
    let mut dz2 = vec![0.0; h];
    let mut dz1 = vec![0.0; h];
    for i in 0..n {
        let z1i = &trace.z1[i * h..(i + 1) * h];
        let z2i = &trace.z2[i * h..(i + 1) * h];
        for d in 0..h {
            h1[d] = relu(z1i[d]);
            h2[d] = relu(z2i[d]);
        }
        let dz3 = dlogit[i];
        outer_add(&mut g[layout.w3.clone()], 1, h, &[dz3], &h2);
        g[layout.b3.start] += dz3;

        for d in 0..h {
            dz2[d] = if z2i[d] > 0.0 { dz3 * w3[d] } else { 0.0 };
        }
        outer_add(&mut g[layout.w2.clone()], h, h, &dz2, &h1);
        add_into(&mut g[layout.b2.clone()], &dz2);

        let mut dh1 = vec![0.0; h];
        matvec_t_add(w2, h, h, &dz2, &mut dh1);
        for d in 0..h {
            dz1[d] = if z1i[d] > 0.0 { dh1[d] } else { 0.0 };
        }
        outer_add(
            &mut g[layout.w1.clone()],
            h,
            h,
            &dz1,
            &xl[i * h..(i + 1) * h],
        );
        add_into(&mut g[layout.b1.clone()], &dz1);
        matvec_t_add(w1, h, h, &dz1, &mut dx[i * h..(i + 1) * h]);
    }

    for l in (0..trace.convs.len()).rev() {
        let [a2, a3, a4, a5] = params.conv(l);
        let [r2, r3, r4, r5] = layout.conv[l].clone();
        let conv = &trace.convs[l];
        let x = &trace.xs[l];

        // residual path passes dx through unchanged
        let mut dx_in = dx.clone();
        let mut du = vec![0.0; n * h];
        for (k, (d, &u)) in du.iter_mut().zip(&conv.pre).enumerate() {
            if u > 0.0 {
                *d = dx[k];
            }
        }

        // per-vertex upstream signals for the A3, A4 and A5 projections
        let mut d_a3x = vec![0.0; n * h];
        let mut d_a4x = vec![0.0; n * h];
        let mut d_a5x = vec![0.0; n * h];
        let mut edge = 0;
        for i in 0..n {
            let dui = &du[i * h..(i + 1) * h];
            for &j in &trace.nbrs[i] {
                let eta = &conv.gates[edge * h..(edge + 1) * h];
                let cj = &conv.a3x[j * h..(j + 1) * h];
                for d in 0..h {
                    d_a3x[j * h + d] += dui[d] * eta[d];
                    let dgate = dui[d] * cj[d] * eta[d] * (1.0 - eta[d]);
                    d_a4x[i * h + d] += dgate;
                    d_a5x[j * h + d] += dgate;
                }
                edge += 1;
            }
        }

        for i in 0..n {
            let xi = &x[i * h..(i + 1) * h];
            let out = &mut dx_in[i * h..(i + 1) * h];
            for (r, m, up) in [
                (&r2, a2, &du),
                (&r3, a3, &d_a3x),
                (&r4, a4, &d_a4x),
                (&r5, a5, &d_a5x),
            ] {
                let upi = &up[i * h..(i + 1) * h];
                outer_add(&mut g[r.clone()], h, h, upi, xi);
                matvec_t_add(m, h, h, upi, out);
            }
        }
        dx = dx_in;
    }

    for i in 0..n {
        let dxi = &dx[i * h..(i + 1) * h];
        outer_add(&mut g[layout.a1.clone()], h, 2, dxi, &trace.coords[i]);
        add_into(&mut g[layout.b.clone()], dxi);
    }
    Ok(())
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
