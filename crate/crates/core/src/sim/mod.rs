//! Procedural egocentric play-session simulator: distinguishable toy glyphs
//! on a tabletop, head-motion camera pan, and parameterized gaze policies
//! producing ground-truth gaze logs.

pub mod glyph;
pub mod oracle;
pub mod policy;
pub mod scene;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CameraIntrinsics, GazePoint};
use crate::img::{LabelMask, RgbImage};

pub use glyph::{default_objects, ObjectSpec, ShapeFamily};
pub use oracle::{generate_oracle_views, OracleView};
pub use policy::{GazePolicy, PolicyKind};
pub use scene::World;

/// Desk-scale default glyph size on a 64-px frame.
pub const DESK_OBJECT_SIZE_PX: f32 = 10.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid session config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Background {
    Clutter,
    Blank,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadMotion {
    pub amplitude_deg: f64,
    pub period_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub intr: CameraIntrinsics,
    pub duration_s: f64,
    pub n_objects: usize,
    pub policy: GazePolicy,
    pub head_motion: HeadMotion,
    pub background: Background,
    pub render_seed: u64,
    /// Seed of the toy inventory. Sessions meant to share one toy set (the
    /// normal case: every dyad plays with the same toys) share this seed.
    #[serde(default)]
    pub object_seed: u64,
}

impl SessionConfig {
    pub fn n_frames(&self) -> usize {
        (self.duration_s * self.intr.fps).round() as usize
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.n_frames() < 2 {
            return Err(SimError::BadConfig(format!(
                "duration {}s at {} fps yields fewer than 2 frames",
                self.duration_s, self.intr.fps
            )));
        }
        if self.n_objects < 2 {
            return Err(SimError::BadConfig(format!("need at least 2 objects, got {}", self.n_objects)));
        }
        let p = &self.policy;
        if p.mean_fixation_s <= 0.0 || p.mean_look_bout_s <= 0.0 || p.mean_hold_look_s <= 0.0 {
            return Err(SimError::BadConfig("policy durations must be positive".into()));
        }
        Ok(())
    }
}

/// One simulated frame with ground-truth gaze labels.
#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub frame_idx: usize,
    pub image: RgbImage,
    pub gaze: GazePoint,
    pub target_object: Option<u32>,
    pub holding: bool,
}

/// Gaze and labels only; used when frames are not needed (event analysis).
#[derive(Debug, Clone, Copy)]
pub struct GazeLog {
    pub frame_idx: usize,
    pub gaze: GazePoint,
    pub target_object: Option<u32>,
    pub holding: bool,
}

/// Full simulation output with optional label masks and introspection traces.
pub struct SessionTrace {
    pub frames: Vec<FrameRecord>,
    pub masks: Option<Vec<LabelMask>>,
    /// Per-frame unwrapped view parameter of every object.
    pub view_trace: Vec<Vec<f32>>,
    /// Per-frame held object index.
    pub hold_trace: Vec<Option<usize>>,
    pub gaze_centroid: GazePoint,
    pub objects: Vec<ObjectSpec>,
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub images: bool,
    pub masks: bool,
}

/// Rasterize the current world and label it at `gaze`.
pub fn render_frame(cfg: &SessionConfig, world: &World, gaze: GazePoint) -> FrameRecord {
    let (image, _) = world.render(cfg, false);
    let target_object = world.object_at(gaze.x, gaze.y);
    let holding = match (world.held, target_object) {
        (Some(h), Some(t)) => world.objects[h].object_id == t,
        _ => false,
    };
    FrameRecord { frame_idx: world.frame_idx, image, gaze, target_object, holding }
}

fn run_once(
    cfg: &SessionConfig,
    opts: SimOptions,
    gaze_override: Option<GazePoint>,
) -> SessionTrace {
    let objects = default_objects(cfg.n_objects, DESK_OBJECT_SIZE_PX, cfg.object_seed);
    let mut world = World::new(cfg, objects.clone());
    let mut behavior = policy::behavior_for(&cfg.policy);
    let n = cfg.n_frames();

    let mut frames = Vec::with_capacity(n);
    let mut masks = if opts.masks { Some(Vec::with_capacity(n)) } else { None };
    let mut view_trace = Vec::with_capacity(n);
    let mut hold_trace = Vec::with_capacity(n);
    let mut sum = (0.0f64, 0.0f64);

    for idx in 0..n {
        let decision = behavior.next(cfg, &world);
        world.held = decision.hold;
        world.apply_hold_scale();
        let gaze = gaze_override.unwrap_or(decision.gaze);
        sum.0 += decision.gaze.x;
        sum.1 += decision.gaze.y;

        let target_object = world.object_at(gaze.x, gaze.y);
        let holding = match (world.held, target_object) {
            (Some(h), Some(t)) => world.objects[h].object_id == t,
            _ => false,
        };
        let image = if opts.images {
            let (img, mask) = world.render(cfg, opts.masks);
            if let (Some(ms), Some(m)) = (masks.as_mut(), mask) {
                ms.push(m);
            }
            img
        } else {
            RgbImage::new(0, 0)
        };
        view_trace.push(world.poses.iter().map(|p| p.view).collect());
        hold_trace.push(world.held);
        frames.push(FrameRecord { frame_idx: idx, image, gaze, target_object, holding });
        world.step(cfg);
    }

    let centroid = GazePoint::new(sum.0 / n as f64, sum.1 / n as f64);
    SessionTrace { frames, masks, view_trace, hold_trace, gaze_centroid: centroid, objects }
}

/// Simulate a full session. For `NoEyeMovement` policies the natural trace is
/// simulated first to define the session gaze centroid, then every gaze
/// sample is replaced by that centroid and relabeled.
pub fn simulate_session_trace(cfg: &SessionConfig, opts: SimOptions) -> Result<SessionTrace, SimError> {
    cfg.validate()?;
    if cfg.policy.kind == PolicyKind::NoEyeMovement {
        let dry = run_once(cfg, SimOptions { images: false, masks: false }, None);
        let centroid = dry.gaze_centroid;
        let mut trace = run_once(cfg, opts, Some(centroid));
        trace.gaze_centroid = centroid;
        return Ok(trace);
    }
    Ok(run_once(cfg, opts, None))
}

pub fn simulate_session(cfg: &SessionConfig) -> Result<Vec<FrameRecord>, SimError> {
    Ok(simulate_session_trace(cfg, SimOptions { images: true, masks: false })?.frames)
}

/// Gaze trajectory and labels without any rasterization.
pub fn simulate_gaze_log(cfg: &SessionConfig) -> Result<Vec<GazeLog>, SimError> {
    let trace = simulate_session_trace(cfg, SimOptions { images: false, masks: false })?;
    Ok(trace
        .frames
        .iter()
        .map(|f| GazeLog {
            frame_idx: f.frame_idx,
            gaze: f.gaze,
            target_object: f.target_object,
            holding: f.holding,
        })
        .collect())
}
