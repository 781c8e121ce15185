//! Declarative experiment configuration (TOML) and its canonical hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eval::ProbeConfig;
use crate::geometry::CameraIntrinsics;
use crate::sim::{Background, GazePolicy, HeadMotion, PolicyKind, SessionConfig};
use crate::ssl::SslConfig;

use super::ExpError;

/// Environment variable overriding the output root.
pub const OUTPUT_ROOT_ENV: &str = "GAZE_SSL_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMeta {
    pub name: String,
    pub output_root: PathBuf,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSection {
    pub width_px: u32,
    pub height_px: u32,
    pub hfov_deg: f64,
    pub fps: f64,
}

impl Default for CameraSection {
    fn default() -> Self {
        Self { width_px: 64, height_px: 64, hfov_deg: 72.0, fps: 30.0 }
    }
}

fn default_duration() -> f64 {
    120.0
}
fn default_n_objects() -> usize {
    8
}
fn default_head_amplitude() -> f64 {
    3.0
}
fn default_head_period() -> f64 {
    5.0
}
fn default_background() -> Background {
    Background::Clutter
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSection {
    #[serde(default = "default_n_objects")]
    pub n_objects: usize,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_background")]
    pub background: Background,
    #[serde(default = "default_head_amplitude")]
    pub head_amplitude_deg: f64,
    #[serde(default = "default_head_period")]
    pub head_period_s: f64,
    /// Toy inventory seed shared by all sessions of the experiment.
    #[serde(default)]
    pub object_seed: u64,
}

impl Default for SceneSection {
    fn default() -> Self {
        Self {
            n_objects: default_n_objects(),
            duration_s: default_duration(),
            background: default_background(),
            head_amplitude_deg: default_head_amplitude(),
            head_period_s: default_head_period(),
            object_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub mean_fixation_s: f64,
    pub mean_look_bout_s: f64,
    pub mean_hold_look_s: f64,
    pub saccade_amplitude_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoliciesSection {
    pub toddler: PolicyParams,
    pub adult: PolicyParams,
}

impl Default for PoliciesSection {
    fn default() -> Self {
        let t = GazePolicy::toddler_like(0);
        let a = GazePolicy::adult_like(0);
        Self {
            toddler: PolicyParams {
                mean_fixation_s: t.mean_fixation_s,
                mean_look_bout_s: t.mean_look_bout_s,
                mean_hold_look_s: t.mean_hold_look_s,
                saccade_amplitude_deg: t.saccade_amplitude_deg,
            },
            adult: PolicyParams {
                mean_fixation_s: a.mean_fixation_s,
                mean_look_bout_s: a.mean_look_bout_s,
                mean_hold_look_s: a.mean_hold_look_s,
                saccade_amplitude_deg: a.saccade_amplitude_deg,
            },
        }
    }
}

fn default_probe_views() -> usize {
    192
}
fn default_probe_fraction() -> f64 {
    0.75
}
fn default_probe_split_seed() -> u64 {
    77
}
fn default_probe_view_seed() -> u64 {
    9090
}
fn default_feature_batch() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSection {
    /// Views per object in the probe set (object-fixation style crops).
    #[serde(default = "default_probe_views")]
    pub n_views: usize,
    #[serde(default = "default_probe_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_probe_split_seed")]
    pub split_seed: u64,
    #[serde(default = "default_probe_view_seed")]
    pub view_seed: u64,
    #[serde(default = "default_feature_batch")]
    pub feature_batch: usize,
    #[serde(default)]
    pub optimizer: ProbeConfig,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            n_views: default_probe_views(),
            train_fraction: default_probe_fraction(),
            split_seed: default_probe_split_seed(),
            view_seed: default_probe_view_seed(),
            feature_batch: default_feature_batch(),
            optimizer: ProbeConfig::default(),
        }
    }
}

fn default_widths() -> [usize; 4] {
    [16, 32, 64, 128]
}
fn default_gn_groups() -> usize {
    8
}
fn default_embed_dim() -> usize {
    64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderSection {
    #[serde(default = "default_widths")]
    pub widths: [usize; 4],
    #[serde(default = "default_gn_groups")]
    pub gn_groups: usize,
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
}

impl Default for EncoderSection {
    fn default() -> Self {
        Self { widths: default_widths(), gn_groups: default_gn_groups(), embed_dim: default_embed_dim() }
    }
}

impl EncoderSection {
    pub fn to_encoder_config(self) -> crate::nn::EncoderConfig {
        crate::nn::EncoderConfig {
            in_channels: 3,
            widths: self.widths,
            gn_groups: self.gn_groups,
            embed_dim: self.embed_dim,
        }
    }
}

/// One explicit matrix cell outside the cross product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub strategy: String,
    pub crop_size_px: u32,
    pub delta_t_s: f64,
}

fn default_oracle_views() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSection {
    pub strategies: Vec<String>,
    pub crop_sizes_px: Vec<u32>,
    pub delta_ts: Vec<f64>,
    #[serde(default)]
    pub extra_cells: Vec<CellSpec>,
    /// Views per object in the blank-background training oracle.
    #[serde(default = "default_oracle_views")]
    pub oracle_views: usize,
}

impl Default for MatrixSection {
    fn default() -> Self {
        Self {
            strategies: vec![
                "toddler-gaze".into(),
                "adult-gaze".into(),
                "random-gaze".into(),
                "no-eye-movement".into(),
                "objects-fixation".into(),
                "blank-background".into(),
            ],
            crop_sizes_px: vec![16, 32, 48, 64],
            delta_ts: vec![1.0 / 30.0, 0.5, 1.5],
            extra_cells: Vec::new(),
            oracle_views: default_oracle_views(),
        }
    }
}

fn default_behavior_sweep() -> Vec<f64> {
    (0..10).map(|i| 0.5 + i as f64 * 3.5 / 9.0).collect()
}
fn default_metric_duration() -> f64 {
    600.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorSection {
    /// Values of mean_hold_look_s to sweep (one per-session model each).
    #[serde(default = "default_behavior_sweep")]
    pub hold_look_sweep_s: Vec<f64>,
    /// Session length for metric recovery (no training).
    #[serde(default = "default_metric_duration")]
    pub metric_duration_s: f64,
    /// Also analyze adult-policy sessions alongside the toddler sweep.
    #[serde(default)]
    pub include_adult: bool,
}

impl Default for BehaviorSection {
    fn default() -> Self {
        Self {
            hold_look_sweep_s: default_behavior_sweep(),
            metric_duration_s: default_metric_duration(),
            include_adult: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentMeta,
    #[serde(default)]
    pub camera: CameraSection,
    #[serde(default)]
    pub scene: SceneSection,
    #[serde(default)]
    pub policies: PoliciesSection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub ssl: SslConfig,
    #[serde(default)]
    pub encoder: EncoderSection,
    #[serde(default)]
    pub matrix: MatrixSection,
    #[serde(default)]
    pub behavior: BehaviorSection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ExpError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExpError::Io { path: path.display().to_string(), source: e })?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| ExpError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExpError> {
        if self.experiment.seeds.is_empty() {
            return Err(ExpError::Config("experiment.seeds must be non-empty".into()));
        }
        let intr = self.intrinsics()?;
        for &c in &self.matrix.crop_sizes_px {
            if c > intr.width_px.min(intr.height_px) {
                return Err(ExpError::Config(format!("crop size {c} exceeds the frame")));
            }
        }
        for &dt in &self.matrix.delta_ts {
            if dt < 1.0 / intr.fps - 1e-9 {
                return Err(ExpError::Config(format!("delta_t {dt} below one frame interval")));
            }
        }
        for s in &self.matrix.strategies {
            if super::runner::ExpStrategy::from_name(s).is_none() {
                return Err(ExpError::Config(format!("unknown strategy {s}")));
            }
        }
        for c in &self.matrix.extra_cells {
            if super::runner::ExpStrategy::from_name(&c.strategy).is_none() {
                return Err(ExpError::Config(format!("unknown strategy {}", c.strategy)));
            }
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics, ExpError> {
        CameraIntrinsics::new(
            self.camera.width_px,
            self.camera.height_px,
            self.camera.hfov_deg,
            self.camera.fps,
        )
        .map_err(|e| ExpError::Config(e.to_string()))
    }

    /// Output root, honoring the `GAZE_SSL_OUT` override.
    pub fn output_root(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.experiment.output_root.clone(),
        }
    }

    /// Hash of the canonical (re-serialized) config.
    pub fn config_hash(&self) -> String {
        let canon = toml::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        hex_string(&h.finalize())
    }

    /// Session config for one policy kind and seed.
    pub fn session_config(&self, kind: PolicyKind, seed: u64) -> Result<SessionConfig, ExpError> {
        let params = match kind {
            PolicyKind::AdultLike => self.policies.adult,
            _ => self.policies.toddler,
        };
        let policy = GazePolicy {
            kind,
            mean_fixation_s: params.mean_fixation_s,
            mean_look_bout_s: params.mean_look_bout_s,
            mean_hold_look_s: params.mean_hold_look_s,
            saccade_amplitude_deg: params.saccade_amplitude_deg,
            policy_seed: seed.wrapping_mul(1000).wrapping_add(kind as u64),
        };
        Ok(SessionConfig {
            intr: self.intrinsics()?,
            duration_s: self.scene.duration_s,
            n_objects: self.scene.n_objects,
            policy,
            head_motion: HeadMotion {
                amplitude_deg: self.scene.head_amplitude_deg,
                period_s: self.scene.head_period_s,
            },
            background: self.scene.background,
            render_seed: seed.wrapping_mul(7919).wrapping_add(kind as u64),
            object_seed: self.scene.object_seed,
        })
    }
}

pub fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> &'static str {
        r#"
[experiment]
name = "t"
output_root = "out"
seeds = [1, 2]

[matrix]
strategies = ["toddler-gaze", "random-gaze"]
crop_sizes_px = [32]
delta_ts = [0.033333]
"#
    }

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg: ExperimentConfig = toml::from_str(minimal_toml()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.camera.width_px, 64);
        assert_eq!(cfg.ssl.temperature, 0.08);
        assert_eq!(cfg.probe.n_views, 192);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a: ExperimentConfig = toml::from_str(minimal_toml()).unwrap();
        let b: ExperimentConfig = toml::from_str(minimal_toml()).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        let mut c = a.clone();
        c.ssl.temperature = 0.2;
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn rejects_bad_strategy_and_crop() {
        let mut cfg: ExperimentConfig = toml::from_str(minimal_toml()).unwrap();
        cfg.matrix.strategies.push("teleport-gaze".into());
        assert!(cfg.validate().is_err());
        let mut cfg: ExperimentConfig = toml::from_str(minimal_toml()).unwrap();
        cfg.matrix.crop_sizes_px.push(999);
        assert!(cfg.validate().is_err());
    }
}
