//! Frozen-encoder feature extraction and the multinomial logistic-regression
//! probe.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::img::RgbImage;
use crate::nn::model::encode_raw;
use crate::nn::{AdamW, EncoderConfig, ParamSet, ParamVars, Tape, Tensor};
use crate::ssl::images_to_batch;

use super::EvalError;

/// Features from the frozen encoder (the average-pool output), one row per
/// image. The encoder parameters are read-only throughout.
pub fn extract_features(
    params: &ParamSet,
    enc_cfg: &EncoderConfig,
    images: &[&RgbImage],
    batch_size: usize,
) -> Result<Tensor, EvalError> {
    if images.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let chunks: Vec<&[&RgbImage]> = images.chunks(batch_size.max(1)).collect();
    let feats: Vec<Tensor> = chunks
        .par_iter()
        .map(|chunk| {
            let x = images_to_batch(chunk);
            encode_raw(params, enc_cfg, &x)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let dim = feats[0].shape[1];
    let mut out = Tensor::zeros(&[images.len(), dim]);
    let mut row = 0;
    for f in feats {
        let rows = f.shape[0];
        out.data[row * dim..(row + rows) * dim].copy_from_slice(&f.data);
        row += rows;
    }
    Ok(out)
}

fn default_probe_lr() -> f32 {
    0.1
}
fn default_probe_epochs() -> usize {
    500
}
fn default_probe_grad_tol() -> f32 {
    1e-4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    #[serde(default = "default_probe_lr")]
    pub lr: f32,
    #[serde(default = "default_probe_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_probe_grad_tol")]
    pub grad_tol: f32,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { lr: default_probe_lr(), max_epochs: default_probe_epochs(), grad_tol: default_probe_grad_tol() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
    /// K x K counts, row = true class, column = predicted class.
    pub confusion: Vec<u32>,
    pub n_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
}

/// Stratified index split: per class, a seeded shuffle puts
/// round(fraction * n_c) samples in train (at least 1 on each side when the
/// class has 2+ samples).
pub fn stratified_split(
    labels: &[u32],
    train_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x57a7_1f1e);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (_, mut idxs) in by_class {
        idxs.shuffle(&mut rng);
        let n = idxs.len();
        let n_train = if n == 1 {
            1
        } else {
            ((train_fraction * n as f64).round() as usize).clamp(1, n - 1)
        };
        train.extend_from_slice(&idxs[..n_train]);
        test.extend_from_slice(&idxs[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Train a single linear layer with softmax cross-entropy on frozen features
/// (full batch, AdamW, zero init) and report test accuracy.
pub fn train_probe(
    features: &Tensor,
    labels: &[u32],
    train_idx: &[usize],
    test_idx: &[usize],
    cfg: &ProbeConfig,
) -> Result<ProbeResult, EvalError> {
    if features.shape.len() != 2 || features.shape[0] != labels.len() {
        return Err(EvalError::LengthMismatch { a: features.shape[0], b: labels.len() });
    }
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let dim = features.shape[1];
    let classes: std::collections::BTreeSet<u32> = train_idx.iter().map(|&i| labels[i]).collect();
    if classes.len() < 2 {
        return Err(EvalError::SingleClass);
    }
    // class ids may be sparse; compact them
    let class_of: Vec<u32> = classes.iter().copied().collect();
    let compact: std::collections::BTreeMap<u32, usize> =
        class_of.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let k = class_of.len();

    let gather = |idxs: &[usize]| -> (Tensor, Vec<usize>) {
        let mut x = Tensor::zeros(&[idxs.len(), dim]);
        let mut y = Vec::with_capacity(idxs.len());
        for (row, &i) in idxs.iter().enumerate() {
            x.data[row * dim..(row + 1) * dim]
                .copy_from_slice(&features.data[i * dim..(i + 1) * dim]);
            y.push(*compact.get(&labels[i]).unwrap_or(&usize::MAX));
        }
        (x, y)
    };
    let (train_x, train_y) = gather(train_idx);
    if train_y.contains(&usize::MAX) {
        return Err(EvalError::SingleClass);
    }
    let (test_x, test_y) = gather(test_idx);

    let mut params = ParamSet::new();
    params.insert("probe.w", Tensor::zeros(&[k, dim]));
    params.insert("probe.b", Tensor::zeros(&[k]));
    let mut opt = AdamW::new(cfg.lr, 0.0);
    for _ in 0..cfg.max_epochs {
        let mut tape = Tape::new();
        let vars = ParamVars::bind(&mut tape, &params);
        let x = tape.leaf(train_x.clone());
        let logits = tape.linear(x, vars.var("probe.w"), vars.var("probe.b"));
        let loss = tape.softmax_xent(logits, train_y.clone());
        let grads = tape.backward(loss)?;
        let gvec: Vec<Tensor> =
            params.iter().map(|(n, t)| grads.get(vars.var(n), &t.shape)).collect();
        let norm: f32 =
            gvec.iter().flat_map(|g| g.data.iter()).map(|v| v * v).sum::<f32>().sqrt();
        opt.step(&mut params, &gvec)?;
        if norm < cfg.grad_tol {
            break;
        }
    }

    // test predictions
    let w = params.get("probe.w").unwrap();
    let b = params.get("probe.b").unwrap();
    let logits = crate::nn::kernels::linear_forward(&test_x, w, b);
    let mut confusion = vec![0u32; k * k];
    for (row, &truth) in test_y.iter().enumerate() {
        let scores = &logits.data[row * k..(row + 1) * k];
        let pred = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if truth != usize::MAX {
            confusion[truth * k + pred] += 1;
        }
    }
    let correct: u32 = (0..k).map(|i| confusion[i * k + i]).sum();
    let per_class_accuracy = (0..k)
        .map(|i| {
            let row_total: u32 = confusion[i * k..(i + 1) * k].iter().sum();
            if row_total == 0 {
                0.0
            } else {
                confusion[i * k + i] as f64 / row_total as f64
            }
        })
        .collect();
    Ok(ProbeResult {
        accuracy: correct as f64 / test_y.len() as f64,
        per_class_accuracy,
        confusion,
        n_classes: k,
        n_train: train_idx.len(),
        n_test: test_idx.len(),
    })
}
