//! Model configuration, parameter storage, initialisation and checkpoints.
//!
//! All trainable values live in one flat `Vec<f64>` in a fixed order:
//!
//! ```text
//! A1 (h×2), b (h),
//! for each conv layer: A2, A3, A4, A5 (h×h each),
//! W1 (h×h), b1 (h), W2 (h×h), b2 (h), W3 (1×h), b3 (1)
//! ```
//!
//! Matrices are row-major. The checkpoint payload uses exactly this order.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;
use std::str::FromStr;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::COORD_MAX;

/// Number of weight layers in the output MLP (h → h → h → 1).
pub const MLP_LAYERS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Hidden width.
    pub h: usize,
    /// Number of graph convolution layers.
    pub layers: usize,
    /// Neighbourhood size of the k-NN graph.
    pub k: usize,
}

impl ModelConfig {
    pub fn new(h: usize, layers: usize, k: usize) -> Result<Self> {
        let cfg = ModelConfig { h, layers, k };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.h == 0 || self.layers == 0 || self.k == 0 {
            return Err(Error::InvalidConfig(format!(
                "h, L and k must all be >= 1 (got h = {}, L = {}, k = {})",
                self.h, self.layers, self.k
            )));
        }
        Ok(())
    }

    /// `3h + L·4h² + 2(h² + h) + h + 1`.
    pub fn param_count(&self) -> usize {
        let h = self.h;
        (2 * h + h) + self.layers * 4 * h * h + 2 * (h * h + h) + (h + 1)
    }
}

/// The three hyperparameter presets used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    A,
    B,
    C,
}

impl Setting {
    pub fn config(self) -> ModelConfig {
        match self {
            Setting::A => ModelConfig {
                h: 50,
                layers: 1,
                k: 10,
            },
            Setting::B => ModelConfig {
                h: 100,
                layers: 3,
                k: 5,
            },
            Setting::C => ModelConfig {
                h: 100,
                layers: 3,
                k: 10,
            },
        }
    }

    /// Training length used for the preset at full scale.
    pub fn default_epochs(self) -> usize {
        match self {
            Setting::A => 50,
            Setting::B | Setting::C => 20,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Setting::A => "A",
            Setting::B => "B",
            Setting::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Setting::A),
            "B" => Ok(Setting::B),
            "C" => Ok(Setting::C),
            other => Err(Error::InvalidConfig(format!("unknown setting {other:?}"))),
        }
    }
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layout {
    pub a1: Range<usize>,
    pub b: Range<usize>,
    pub conv: Vec<[Range<usize>; 4]>,
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
    pub w3: Range<usize>,
    pub b3: Range<usize>,
    pub total: usize,
}

impl Layout {
    fn new(cfg: &ModelConfig) -> Self {
        let h = cfg.h;
        let mut at = 0;
        let mut take = |len: usize| {
            let r = at..at + len;
            at += len;
            r
        };
        let a1 = take(h * 2);
        let b = take(h);
        let conv = (0..cfg.layers)
            .map(|_| [take(h * h), take(h * h), take(h * h), take(h * h)])
            .collect();
        let w1 = take(h * h);
        let b1 = take(h);
        let w2 = take(h * h);
        let b2 = take(h);
        let w3 = take(h);
        let b3 = take(1);
        Layout {
            a1,
            b,
            conv,
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            total: at,
        }
    }

    /// Weight matrices as `(range, rows, cols)`; everything else is a bias.
    fn matrices(&self, h: usize) -> Vec<(Range<usize>, usize, usize)> {
        let mut out = vec![(self.a1.clone(), h, 2)];
        for layer in &self.conv {
            out.extend(layer.iter().map(|r| (r.clone(), h, h)));
        }
        out.push((self.w1.clone(), h, h));
        out.push((self.w2.clone(), h, h));
        out.push((self.w3.clone(), 1, h));
        out
    }
}

/// Trainable parameters of the residual gated GCN. Gradients share the
/// same shape and are represented by the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    cfg: ModelConfig,
    layout: Layout,
    data: Vec<f64>,
}

pub type Gradients = ModelParams;

impl ModelParams {
    pub fn zeros(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = Layout::new(&cfg);
        let data = vec![0.0; layout.total];
        Ok(ModelParams { cfg, layout, data })
    }

    pub fn from_vec(cfg: ModelConfig, data: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(cfg)?;
        if data.len() != p.data.len() {
            return Err(Error::LengthMismatch {
                expected: p.data.len(),
                got: data.len(),
            });
        }
        p.data = data;
        Ok(p)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn param_count(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn a1(&self) -> &[f64] {
        &self.data[self.layout.a1.clone()]
    }

    pub fn b(&self) -> &[f64] {
        &self.data[self.layout.b.clone()]
    }

    /// `(A2, A3, A4, A5)` of conv layer `l`.
    pub fn conv(&self, l: usize) -> [&[f64]; 4] {
        let r = &self.layout.conv[l];
        [
            &self.data[r[0].clone()],
            &self.data[r[1].clone()],
            &self.data[r[2].clone()],
            &self.data[r[3].clone()],
        ]
    }

    pub fn mlp(&self) -> [&[f64]; 6] {
        let l = &self.layout;
        [
            &self.data[l.w1.clone()],
            &self.data[l.b1.clone()],
            &self.data[l.w2.clone()],
            &self.data[l.b2.clone()],
            &self.data[l.w3.clone()],
            &self.data[l.b3.clone()],
        ]
    }

    /// Adds `scale * other` element-wise.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        debug_assert_eq!(self.cfg, other.cfg);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }
}

/// Glorot-uniform weights (`±sqrt(6 / (fan_in + fan_out))`), zero biases.
///
/// The input matrix `A1` acts on raw coordinates in `[0, 100]`, so its bound
/// is additionally divided by the coordinate range. This is Glorot on unit
/// scaled inputs. Each `A3` bound is divided by `k`, since its output is
/// summed over `k` neighbours with near-identical embeddings. Both keep the
/// initial logits near zero.
pub fn init_params(cfg: ModelConfig, seed: u64) -> Result<ModelParams> {
    let mut params = ModelParams::zeros(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a1 = params.layout.a1.clone();
    let a3: Vec<_> = params.layout.conv.iter().map(|c| c[1].clone()).collect();
    for (range, rows, cols) in params.layout.matrices(cfg.h) {
        let mut s = (6.0 / (rows + cols) as f64).sqrt();
        if range == a1 {
            s /= f64::from(COORD_MAX);
        }
        if a3.contains(&range) {
            s /= cfg.k as f64;
        }
        let dist = Uniform::new_inclusive(-s, s).expect("finite positive bound");
        for v in &mut params.data[range] {
            *v = dist.sample(&mut rng);
        }
    }
    Ok(params)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub h: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub k: usize,
    pub mlp_layers: usize,
    pub param_count: usize,
    pub format: String,
}

pub const CHECKPOINT_FORMAT: &str = "f64le";

impl CheckpointHeader {
    pub fn config(&self) -> Result<ModelConfig> {
        ModelConfig::new(self.h, self.layers, self.k)
    }
}

/// Writes a JSON header line terminated by `\n`, then every parameter as a
/// little-endian `f64` in layout order.
pub fn write_checkpoint<W: Write>(params: &ModelParams, mut out: W) -> Result<()> {
    let header = CheckpointHeader {
        h: params.cfg.h,
        layers: params.cfg.layers,
        k: params.cfg.k,
        mlp_layers: MLP_LAYERS,
        param_count: params.param_count(),
        format: CHECKPOINT_FORMAT.to_string(),
    };
    let json = serde_json::to_string(&header).map_err(|source| Error::Json {
        context: "checkpoint header".into(),
        source,
    })?;
    out.write_all(json.as_bytes())?;
    out.write_all(b"\n")?;
    let mut payload = Vec::with_capacity(params.data.len() * 8);
    for v in &params.data {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&payload)?;
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint_header<R: BufRead>(input: &mut R) -> Result<CheckpointHeader> {
    let mut line = Vec::new();
    input.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Checkpoint("missing header line".into()));
    }
    let header: CheckpointHeader =
        serde_json::from_slice(&line[..line.len() - 1]).map_err(|source| Error::Json {
            context: "checkpoint header".into(),
            source,
        })?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!(
            "unsupported payload format {:?}",
            header.format
        )));
    }
    if header.mlp_layers != MLP_LAYERS {
        return Err(Error::Checkpoint(format!(
            "expected {MLP_LAYERS} MLP layers, header says {}",
            header.mlp_layers
        )));
    }
    let cfg = header.config()?;
    if cfg.param_count() != header.param_count {
        return Err(Error::Checkpoint(format!(
            "header param_count {} does not match configuration ({})",
            header.param_count,
            cfg.param_count()
        )));
    }
    Ok(header)
}

pub fn read_checkpoint<R: BufRead>(mut input: R) -> Result<ModelParams> {
    let header = read_checkpoint_header(&mut input)?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != header.param_count * 8 {
        return Err(Error::Checkpoint(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            header.param_count * 8
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ModelParams::from_vec(header.config()?, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_parameter_counts() {
        assert_eq!(Setting::A.config().param_count(), 15_301);
        assert_eq!(Setting::B.config().param_count(), 140_601);
        assert_eq!(Setting::C.config().param_count(), 140_601);
        for s in [Setting::A, Setting::B, Setting::C] {
            let p = init_params(s.config(), 0).unwrap();
            assert_eq!(p.param_count(), s.config().param_count());
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let cfg = ModelConfig::new(6, 2, 3).unwrap();
        let a = init_params(cfg, 17).unwrap();
        assert_eq!(a, init_params(cfg, 17).unwrap());
        assert_ne!(a, init_params(cfg, 18).unwrap());

        let s_a1 = (6.0f64 / 8.0).sqrt() / 100.0;
        assert!(a.a1().iter().all(|v| v.abs() <= s_a1));
        assert!(a.b().iter().all(|&v| v == 0.0));
        let [_, b1, _, b2, w3, b3] = a.mlp();
        assert!(b1.iter().chain(b2).chain(b3).all(|&v| v == 0.0));
        assert!(w3.iter().all(|v| v.abs() <= (6.0f64 / 7.0).sqrt()));
        assert!(w3.iter().any(|&v| v != 0.0));

        let s_hh = (6.0f64 / 12.0).sqrt();
        for l in 0..2 {
            let [a2, a3, _, _] = a.conv(l);
            assert!(a3.iter().all(|v| v.abs() <= s_hh / 3.0));
            assert!(a2.iter().any(|v| v.abs() > s_hh / 3.0));
        }
    }

    #[test]
    fn rejects_degenerate_config() {
        assert!(ModelConfig::new(0, 1, 1).is_err());
        assert!(ModelConfig::new(1, 0, 1).is_err());
        assert!(ModelConfig::new(1, 1, 0).is_err());
    }

    #[test]
    fn setting_parses() {
        assert_eq!("b".parse::<Setting>().unwrap(), Setting::B);
        assert!("D".parse::<Setting>().is_err());
    }

    #[test]
    fn checkpoint_roundtrip_and_layout() {
        let cfg = ModelConfig::new(3, 1, 2).unwrap();
        let p = init_params(cfg, 5).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&p, &mut buf).unwrap();
        let nl = buf.iter().position(|&b| b == b'\n').unwrap();
        let header: serde_json::Value = serde_json::from_slice(&buf[..nl]).unwrap();
        assert_eq!(header["L"], 1);
        assert_eq!(header["param_count"], cfg.param_count());
        assert_eq!(header["format"], "f64le");
        assert_eq!(buf.len() - nl - 1, cfg.param_count() * 8);
        // A1 comes first in the payload
        let first = f64::from_le_bytes(buf[nl + 1..nl + 9].try_into().unwrap());
        assert_eq!(first, p.a1()[0]);

        let back = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(back, p);

        assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_checkpoint(&extra[..]).is_err());
    }
}
