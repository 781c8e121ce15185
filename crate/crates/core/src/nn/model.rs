//! The desk-scale convolutional encoder and its projection/prediction heads.
//!
//! Encoder: four conv(3x3) -> group_norm -> relu -> max_pool blocks followed
//! by global average pooling. The feature tap for linear probing is the
//! average-pool output. Projector and predictor are two-layer MLPs.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use super::kernels::{self, Conv2dSpec};
use super::tape::{Tape, Var};
use super::tensor::Tensor;
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    pub in_channels: usize,
    pub widths: [usize; 4],
    pub gn_groups: usize,
    pub embed_dim: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self { in_channels: 3, widths: [16, 32, 64, 128], gn_groups: 8, embed_dim: 64 }
    }
}

impl EncoderConfig {
    /// Dimensionality of the frozen feature (the average-pool output).
    pub fn feature_dim(&self) -> usize {
        self.widths[3]
    }

    /// Smallest input side the four pooling stages support.
    pub const MIN_INPUT: usize = 16;
}

/// Ordered collection of named parameter tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        self.entries.push((name.into(), t));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|(_, t)| t.is_finite())
    }

    /// SHA-256 over names, shapes, and raw little-endian payloads. Used by
    /// tests and the frozen-encoder contract.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for (n, t) in &self.entries {
            h.update((n.len() as u64).to_le_bytes());
            h.update(n.as_bytes());
            h.update((t.shape.len() as u64).to_le_bytes());
            for d in &t.shape {
                h.update((*d as u64).to_le_bytes());
            }
            for v in &t.data {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().into()
    }

    /// Merge another set's parameters (used to combine encoder + heads).
    pub fn extend(&mut self, other: ParamSet) {
        self.entries.extend(other.entries);
    }

    /// Subset whose names start with `prefix`.
    pub fn subset(&self, prefix: &str) -> ParamSet {
        ParamSet {
            entries: self
                .entries
                .iter()
                .filter(|(n, _)| n.starts_with(prefix))
                .cloned()
                .collect(),
        }
    }
}

fn conv_block_names(i: usize) -> (String, String, String, String) {
    (
        format!("enc.block{i}.conv.w"),
        format!("enc.block{i}.conv.b"),
        format!("enc.block{i}.gn.gamma"),
        format!("enc.block{i}.gn.beta"),
    )
}

/// Seeded Kaiming-uniform initialization of the encoder parameters.
pub fn init_encoder(cfg: &EncoderConfig, seed: u64) -> ParamSet {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut p = ParamSet::new();
    let mut c_in = cfg.in_channels;
    for (i, &c_out) in cfg.widths.iter().enumerate() {
        let (wn, bn, gn, bt) = conv_block_names(i);
        let fan_in = c_in * 9;
        p.insert(wn, Tensor::kaiming_uniform(&[c_out, c_in, 3, 3], fan_in, &mut rng));
        p.insert(bn, Tensor::zeros(&[c_out]));
        p.insert(gn, Tensor::full(&[c_out], 1.0));
        p.insert(bt, Tensor::zeros(&[c_out]));
        c_in = c_out;
    }
    p
}

/// Two-layer MLP head: feature_dim -> feature_dim -> embed_dim.
pub fn init_projector(cfg: &EncoderConfig, seed: u64) -> ParamSet {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let f = cfg.feature_dim();
    let e = cfg.embed_dim;
    let mut p = ParamSet::new();
    p.insert("proj.fc1.w", Tensor::kaiming_uniform(&[f, f], f, &mut rng));
    p.insert("proj.fc1.b", Tensor::zeros(&[f]));
    p.insert("proj.fc2.w", Tensor::kaiming_uniform(&[e, f], f, &mut rng));
    p.insert("proj.fc2.b", Tensor::zeros(&[e]));
    p
}

/// Two-layer MLP predictor: embed_dim -> embed_dim -> embed_dim.
pub fn init_predictor(cfg: &EncoderConfig, seed: u64) -> ParamSet {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let e = cfg.embed_dim;
    let mut p = ParamSet::new();
    p.insert("pred.fc1.w", Tensor::kaiming_uniform(&[e, e], e, &mut rng));
    p.insert("pred.fc1.b", Tensor::zeros(&[e]));
    p.insert("pred.fc2.w", Tensor::kaiming_uniform(&[e, e], e, &mut rng));
    p.insert("pred.fc2.b", Tensor::zeros(&[e]));
    p
}

/// Tape-bound parameter handles, aligned with a [`ParamSet`]'s order.
pub struct ParamVars {
    pairs: Vec<(String, Var)>,
}

impl ParamVars {
    pub fn bind(tape: &mut Tape, params: &ParamSet) -> Self {
        let pairs = params.iter().map(|(n, t)| (n.to_string(), tape.leaf(t.clone()))).collect();
        Self { pairs }
    }

    pub fn var(&self, name: &str) -> Var {
        self.pairs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .unwrap_or_else(|| panic!("parameter {name} not bound"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Var)> {
        self.pairs.iter().map(|(n, v)| (n.as_str(), *v))
    }
}

fn conv_spec(c_in: usize, c_out: usize) -> Conv2dSpec {
    Conv2dSpec { in_channels: c_in, out_channels: c_out, kernel: 3, stride: 1, pad: 1 }
}

/// Encoder forward on the tape: x [B,3,H,W] -> features [B, feature_dim].
pub fn encoder_forward(
    tape: &mut Tape,
    vars: &ParamVars,
    cfg: &EncoderConfig,
    x: Var,
) -> Result<Var, NnError> {
    let in_h = tape.shape(x)[2];
    let in_w = tape.shape(x)[3];
    if in_h < EncoderConfig::MIN_INPUT || in_w < EncoderConfig::MIN_INPUT {
        return Err(NnError::ShapeMismatch(format!(
            "encoder input must be at least {0}x{0}, got {in_h}x{in_w}",
            EncoderConfig::MIN_INPUT
        )));
    }
    let mut h = x;
    let mut c_in = cfg.in_channels;
    for (i, &c_out) in cfg.widths.iter().enumerate() {
        let (wn, bn, gn, bt) = conv_block_names(i);
        h = tape.conv2d(h, vars.var(&wn), vars.var(&bn), conv_spec(c_in, c_out));
        h = tape.group_norm(h, vars.var(&gn), vars.var(&bt), cfg.gn_groups);
        h = tape.relu(h);
        h = tape.max_pool2(h);
        c_in = c_out;
    }
    Ok(tape.global_avg_pool(h))
}

/// Projector forward on the tape: [B, feature_dim] -> [B, embed_dim].
pub fn projector_forward(tape: &mut Tape, vars: &ParamVars, feat: Var) -> Var {
    let h = tape.linear(feat, vars.var("proj.fc1.w"), vars.var("proj.fc1.b"));
    let h = tape.relu(h);
    tape.linear(h, vars.var("proj.fc2.w"), vars.var("proj.fc2.b"))
}

/// Predictor forward on the tape: [B, embed_dim] -> [B, embed_dim].
pub fn predictor_forward(tape: &mut Tape, vars: &ParamVars, z: Var) -> Var {
    let h = tape.linear(z, vars.var("pred.fc1.w"), vars.var("pred.fc1.b"));
    let h = tape.relu(h);
    tape.linear(h, vars.var("pred.fc2.w"), vars.var("pred.fc2.b"))
}

/// No-grad encoder forward: x [B,3,H,W] -> [B, feature_dim].
pub fn encode_raw(params: &ParamSet, cfg: &EncoderConfig, x: &Tensor) -> Result<Tensor, NnError> {
    if x.shape[2] < EncoderConfig::MIN_INPUT || x.shape[3] < EncoderConfig::MIN_INPUT {
        return Err(NnError::ShapeMismatch(format!(
            "encoder input must be at least {0}x{0}, got {1}x{2}",
            EncoderConfig::MIN_INPUT,
            x.shape[2],
            x.shape[3]
        )));
    }
    let mut h = x.clone();
    let mut c_in = cfg.in_channels;
    for (i, &c_out) in cfg.widths.iter().enumerate() {
        let (wn, bn, gn, bt) = conv_block_names(i);
        let w = params.get(&wn).ok_or_else(|| NnError::MissingParam(wn.clone()))?;
        let b = params.get(&bn).ok_or_else(|| NnError::MissingParam(bn.clone()))?;
        h = kernels::conv2d_forward(&h, w, b, &conv_spec(c_in, c_out));
        let gamma = params.get(&gn).ok_or_else(|| NnError::MissingParam(gn.clone()))?;
        let beta = params.get(&bt).ok_or_else(|| NnError::MissingParam(bt.clone()))?;
        h = kernels::group_norm_forward(&h, gamma, beta, cfg.gn_groups);
        h = kernels::relu_forward(&h);
        let (pooled, _) = kernels::max_pool2_forward(&h);
        h = pooled;
        c_in = c_out;
    }
    Ok(kernels::global_avg_pool_forward(&h))
}

/// No-grad projector forward.
pub fn project_raw(params: &ParamSet, feat: &Tensor) -> Result<Tensor, NnError> {
    let need = |n: &str| params.get(n).ok_or_else(|| NnError::MissingParam(n.into()));
    let h = kernels::linear_forward(feat, need("proj.fc1.w")?, need("proj.fc1.b")?);
    let h = kernels::relu_forward(&h);
    Ok(kernels::linear_forward(&h, need("proj.fc2.w")?, need("proj.fc2.b")?))
}
