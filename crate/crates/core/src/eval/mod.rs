//! Frozen-encoder evaluation: feature extraction, the linear probe,
//! statistical tests, and embedding export.

pub mod probe;
pub mod stats;

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::nn::{NnError, Tensor};

pub use probe::{extract_features, stratified_split, train_probe, ProbeConfig, ProbeResult};
pub use stats::{betai, ln_gamma, pearson, t_two_tailed_p, ttest_ind, ttest_welch, StatTestResult};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("zero variance input")]
    ZeroVariance,
    #[error("statistic undefined for identical constant samples")]
    Degenerate,
    #[error("empty input")]
    EmptyInput,
    #[error("training split contains a single class")]
    SingleClass,
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("io error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Write features as CSV: one row per sample, label first, then the feature
/// values at 9 significant digits (lossless for f32).
pub fn export_embeddings(features: &Tensor, labels: &[u32], path: &Path) -> Result<(), EvalError> {
    if features.shape.len() != 2 || features.shape[0] != labels.len() {
        return Err(EvalError::LengthMismatch { a: features.shape[0], b: labels.len() });
    }
    let dim = features.shape[1];
    let idim = |e: std::io::Error| EvalError::Io { path: path.display().to_string(), source: e };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(idim)?);
    let idim = |e: std::io::Error| EvalError::Io { path: path.display().to_string(), source: e };
    for (row, &label) in labels.iter().enumerate() {
        let mut line = label.to_string();
        for v in &features.data[row * dim..(row + 1) * dim] {
            line.push(',');
            line.push_str(&format!("{v:.8e}"));
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(idim)?;
    }
    w.flush().map_err(idim)?;
    Ok(())
}

/// Read back an embedding CSV (labels, features).
pub fn read_embeddings(path: &Path) -> Result<(Tensor, Vec<u32>), EvalError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EvalError::Io { path: path.display().to_string(), source: e })?;
    let mut labels = Vec::new();
    let mut data = Vec::new();
    let mut dim = 0usize;
    for line in text.lines().filter(|l| !l.is_empty()) {
        let mut parts = line.split(',');
        labels.push(parts.next().unwrap_or("0").parse().unwrap_or(0));
        let row: Vec<f32> = parts.map(|v| v.parse().unwrap_or(f32::NAN)).collect();
        dim = row.len();
        data.extend(row);
    }
    Ok((Tensor::new(vec![labels.len(), dim], data).map_err(EvalError::Nn)?, labels))
}
