//! Time-based self-supervised training: temporal pair sampling, the
//! SimCLR-TT and BYOL-TT objectives, and the training loop.

pub mod loss;
pub mod method;
pub mod pairs;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{AdamW, EncoderConfig, NnError};

pub use loss::{byol_tt_loss, simclr_tt_loss, NORM_TOLERANCE};
pub use method::{method_by_name, method_names, MethodState, SslMethod};
pub use pairs::{
    images_to_batch, sample_pair_indices, sample_pairs, CropStore, OffsetMode, PairBatch,
    SessionCrops,
};

#[derive(Debug, Error)]
pub enum SslError {
    #[error("no valid pair positions in the given streams")]
    NoValidPairs,
    #[error("embedding row {row} has norm {norm}, expected 1")]
    Unnormalized { row: usize, norm: f32 },
    #[error("invalid ssl config: {0}")]
    BadConfig(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NanLoss { epoch: usize, batch: usize },
    #[error("non-finite parameters after epoch {epoch}")]
    NonFiniteParams { epoch: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Image(#[from] crate::img::ImageError),
}

fn default_method() -> String {
    "simclr-tt".into()
}
fn default_delta_t() -> f64 {
    1.0 / 30.0
}
fn default_temperature() -> f32 {
    0.08
}
fn default_batch() -> usize {
    64
}
fn default_epochs() -> usize {
    30
}
fn default_lr() -> f32 {
    1e-2
}
fn default_wd() -> f32 {
    1e-4
}
fn default_ema() -> f32 {
    0.99
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SslConfig {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_delta_t")]
    pub delta_t_s: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f32,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f32,
    #[serde(default = "default_wd")]
    pub weight_decay: f32,
    #[serde(default = "default_ema")]
    pub ema_momentum: f32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub offset_mode: OffsetMode,
    #[serde(default)]
    pub byol_symmetrize: bool,
    /// Photometric augmentation hook; 0 disables it (the default: temporal
    /// pairing is the only augmentation).
    #[serde(default)]
    pub photometric_jitter: f32,
}

impl Default for SslConfig {
    fn default() -> Self {
        Self {
            method: default_method(),
            delta_t_s: default_delta_t(),
            temperature: default_temperature(),
            batch_size: default_batch(),
            epochs: default_epochs(),
            lr: default_lr(),
            weight_decay: default_wd(),
            ema_momentum: default_ema(),
            seed: 0,
            offset_mode: OffsetMode::Uniform,
            byol_symmetrize: false,
            photometric_jitter: 0.0,
        }
    }
}

pub struct TrainOutput {
    pub state: MethodState,
    /// Mean loss per epoch.
    pub loss_curve: Vec<f64>,
}

/// Train a method on the decoded crop streams. One epoch draws
/// ceil(total_records / batch_size) batches with replacement. Deterministic
/// given the config seed.
pub fn train(
    store: &CropStore,
    enc_cfg: &EncoderConfig,
    cfg: &SslConfig,
) -> Result<TrainOutput, SslError> {
    if cfg.batch_size < 2 {
        return Err(SslError::BadConfig(format!("batch_size must be >= 2, got {}", cfg.batch_size)));
    }
    if cfg.delta_t_s < 1.0 / store.fps - 1e-9 {
        return Err(SslError::BadConfig(format!(
            "delta_t {}s is below one frame interval (1/{} s)",
            cfg.delta_t_s, store.fps
        )));
    }
    if cfg.epochs == 0 {
        return Err(SslError::BadConfig("epochs must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&cfg.ema_momentum) {
        return Err(SslError::BadConfig(format!("ema momentum {} not in [0,1]", cfg.ema_momentum)));
    }
    let method = method_by_name(&cfg.method)
        .ok_or_else(|| SslError::BadConfig(format!("unknown method {}", cfg.method)))?;

    let mut state = method.init(enc_cfg, cfg.seed);
    let mut opt = AdamW::new(cfg.lr, cfg.weight_decay);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x7a11_1e55);
    let steps = store.total_records().div_ceil(cfg.batch_size).max(1);
    let max_off = ((cfg.delta_t_s * store.fps).round() as usize).max(1);

    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut sum = 0.0f64;
        for batch_idx in 0..steps {
            let batch = sample_pairs(
                store,
                cfg.delta_t_s,
                cfg.batch_size,
                cfg.offset_mode,
                cfg.photometric_jitter,
                &mut rng,
            )?;
            for &off in &batch.offsets_frames {
                assert!(off >= 1 && off <= max_off, "offset {off} outside 1..={max_off}");
            }
            let loss = method.step(&mut state, &batch, cfg, &mut opt)?;
            if !loss.is_finite() {
                return Err(SslError::NanLoss { epoch, batch: batch_idx });
            }
            sum += loss as f64;
        }
        let finite = state.online.all_finite()
            && state.target.as_ref().map(|t| t.all_finite()).unwrap_or(true);
        if !finite {
            return Err(SslError::NonFiniteParams { epoch });
        }
        loss_curve.push(sum / steps as f64);
    }
    Ok(TrainOutput { state, loss_curve })
}
