//! The five dataset-construction strategies behind one trait, selected by
//! name at runtime.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{compute_crop, deg_to_px, CameraIntrinsics, GazePoint};
use crate::img::{LabelMask, RgbImage};
use crate::sim::oracle::{generate_oracle_views, ORACLE_WINDOW_DEG};
use crate::sim::{Background, FrameRecord, ObjectSpec};

use super::manifest::{write_manifest, StreamManifest, StreamRecord};
use super::StreamError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    HumanGaze,
    RandomGaze,
    NoEyeMovement,
    ObjectsFixation,
    BlankBackground,
}

impl StrategyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::HumanGaze => "human-gaze",
            StrategyKind::RandomGaze => "random-gaze",
            StrategyKind::NoEyeMovement => "no-eye-movement",
            StrategyKind::ObjectsFixation => "objects-fixation",
            StrategyKind::BlankBackground => "blank-background",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "human-gaze" => Some(StrategyKind::HumanGaze),
            "random-gaze" => Some(StrategyKind::RandomGaze),
            "no-eye-movement" => Some(StrategyKind::NoEyeMovement),
            "objects-fixation" => Some(StrategyKind::ObjectsFixation),
            "blank-background" => Some(StrategyKind::BlankBackground),
        _ => None,
        }
    }
}

/// Everything a strategy may need besides the session frames.
pub struct StreamBuildContext<'a> {
    pub session_id: String,
    pub intr: CameraIntrinsics,
    pub crop_size_px: u32,
    /// Dataset root; the strategy writes `<root>/<session_id>/<name>/`.
    pub out_root: &'a Path,
    /// Per-frame object-id masks, required to relabel redrawn gaze points.
    pub masks: Option<&'a [LabelMask]>,
    /// Object inventory (used by the blank-background oracle).
    pub objects: &'a [ObjectSpec],
    pub stream_seed: u64,
    /// Views per object for the blank-background oracle.
    pub oracle_views: usize,
}

impl StreamBuildContext<'_> {
    fn stream_dir(&self, kind: StrategyKind) -> PathBuf {
        self.out_root.join(&self.session_id).join(kind.name())
    }
}

pub trait StreamStrategy {
    fn kind(&self) -> StrategyKind;
    fn build(
        &self,
        session: &[FrameRecord],
        ctx: &StreamBuildContext,
    ) -> Result<StreamManifest, StreamError>;
}

pub fn strategy_names() -> Vec<&'static str> {
    vec!["human-gaze", "random-gaze", "no-eye-movement", "objects-fixation", "blank-background"]
}

pub fn strategy_by_name(name: &str) -> Option<Box<dyn StreamStrategy>> {
    let kind = StrategyKind::from_name(name)?;
    Some(match kind {
        StrategyKind::HumanGaze => Box::new(HumanGazeStream),
        StrategyKind::RandomGaze => Box::new(RandomGazeStream),
        StrategyKind::NoEyeMovement => Box::new(NoEyeMovementStream),
        StrategyKind::ObjectsFixation => Box::new(ObjectsFixationStream),
        StrategyKind::BlankBackground => Box::new(BlankBackgroundStream),
    })
}

/// Build one strategy's stream and persist it under the dataset root.
pub fn build_stream(
    session: &[FrameRecord],
    kind: StrategyKind,
    ctx: &StreamBuildContext,
) -> Result<StreamManifest, StreamError> {
    strategy_by_name(kind.name())
        .ok_or_else(|| StreamError::UnknownStrategy(kind.name().into()))?
        .build(session, ctx)
}

struct StreamWriter {
    dir: PathBuf,
    records: Vec<StreamRecord>,
    fps: f64,
}

impl StreamWriter {
    fn create(ctx: &StreamBuildContext, kind: StrategyKind) -> Result<Self, StreamError> {
        let dir = ctx.stream_dir(kind);
        let crops_dir = dir.join("crops");
        fs::create_dir_all(&crops_dir)
            .map_err(|e| StreamError::Io { path: crops_dir.display().to_string(), source: e })?;
        Ok(Self { dir, records: Vec::new(), fps: ctx.intr.fps })
    }

    fn push(
        &mut self,
        frame_idx: usize,
        image: &RgbImage,
        gaze: (f64, f64),
        target: Option<u32>,
        holding: bool,
    ) -> Result<(), StreamError> {
        let name = format!("crops/{:06}.png", self.records.len());
        image.save_png(&self.dir.join(&name))?;
        self.records.push(StreamRecord::new(frame_idx, self.fps, name, gaze.0, gaze.1, target, holding));
        Ok(())
    }

    fn finish(self, ctx: &StreamBuildContext, kind: StrategyKind) -> Result<StreamManifest, StreamError> {
        let m = StreamManifest {
            session_id: ctx.session_id.clone(),
            intr: ctx.intr,
            strategy: kind,
            crop_size_px: ctx.crop_size_px,
            records: self.records,
        };
        write_manifest(&self.dir.join("manifest.txt"), &m)?;
        Ok(m)
    }
}

fn mask_target(ctx: &StreamBuildContext, frame: usize, gaze: &GazePoint) -> Option<u32> {
    ctx.masks.and_then(|ms| ms.get(frame)).and_then(|m| m.object_at(gaze.x, gaze.y))
}

/// Crops centered on the recorded gaze point.
struct HumanGazeStream;

impl StreamStrategy for HumanGazeStream {
    fn kind(&self) -> StrategyKind {
        StrategyKind::HumanGaze
    }

    fn build(&self, session: &[FrameRecord], ctx: &StreamBuildContext) -> Result<StreamManifest, StreamError> {
        if session.is_empty() {
            return Err(StreamError::EmptySession);
        }
        let mut w = StreamWriter::create(ctx, self.kind())?;
        for f in session {
            let win = compute_crop(&f.gaze, ctx.crop_size_px, &ctx.intr)?;
            let crop = f.image.crop(&win)?;
            w.push(f.frame_idx, &crop, (f.gaze.x, f.gaze.y), f.target_object, f.holding)?;
        }
        w.finish(ctx, self.kind())
    }
}

/// Crops at a fresh uniformly random location every frame.
struct RandomGazeStream;

impl StreamStrategy for RandomGazeStream {
    fn kind(&self) -> StrategyKind {
        StrategyKind::RandomGaze
    }

    fn build(&self, session: &[FrameRecord], ctx: &StreamBuildContext) -> Result<StreamManifest, StreamError> {
        if session.is_empty() {
            return Err(StreamError::EmptySession);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(ctx.stream_seed ^ 0x7a9d_0011);
        let mut w = StreamWriter::create(ctx, self.kind())?;
        for (i, f) in session.iter().enumerate() {
            let gaze = GazePoint::new(
                rng.gen_range(0.0..ctx.intr.width_px as f64),
                rng.gen_range(0.0..ctx.intr.height_px as f64),
            );
            let win = compute_crop(&gaze, ctx.crop_size_px, &ctx.intr)?;
            let crop = f.image.crop(&win)?;
            let target = mask_target(ctx, i, &gaze);
            w.push(f.frame_idx, &crop, (gaze.x, gaze.y), target, false)?;
        }
        w.finish(ctx, self.kind())
    }
}

/// Crops fixed at the session's gaze centroid.
struct NoEyeMovementStream;

impl StreamStrategy for NoEyeMovementStream {
    fn kind(&self) -> StrategyKind {
        StrategyKind::NoEyeMovement
    }

    fn build(&self, session: &[FrameRecord], ctx: &StreamBuildContext) -> Result<StreamManifest, StreamError> {
        if session.is_empty() {
            return Err(StreamError::EmptySession);
        }
        let n = session.len() as f64;
        let cx = session.iter().map(|f| f.gaze.x).sum::<f64>() / n;
        let cy = session.iter().map(|f| f.gaze.y).sum::<f64>() / n;
        let centroid = GazePoint::new(cx, cy);
        let win = compute_crop(&centroid, ctx.crop_size_px, &ctx.intr)?;
        let mut w = StreamWriter::create(ctx, self.kind())?;
        for (i, f) in session.iter().enumerate() {
            let crop = f.image.crop(&win)?;
            let target = mask_target(ctx, i, &centroid);
            w.push(f.frame_idx, &crop, (centroid.x, centroid.y), target, false)?;
        }
        w.finish(ctx, self.kind())
    }
}

/// Keeps only object-labeled frames and crops a 30-degree window around the
/// gaze, rescaled (bilinear) to the training resolution.
struct ObjectsFixationStream;

impl StreamStrategy for ObjectsFixationStream {
    fn kind(&self) -> StrategyKind {
        StrategyKind::ObjectsFixation
    }

    fn build(&self, session: &[FrameRecord], ctx: &StreamBuildContext) -> Result<StreamManifest, StreamError> {
        if session.is_empty() {
            return Err(StreamError::EmptySession);
        }
        let window = deg_to_px(ORACLE_WINDOW_DEG.min(ctx.intr.hfov_deg * 0.9), &ctx.intr)?
            .round()
            .max(8.0) as u32;
        let window = window.min(ctx.intr.width_px).min(ctx.intr.height_px);
        let mut w = StreamWriter::create(ctx, self.kind())?;
        for f in session.iter().filter(|f| f.target_object.is_some()) {
            let win = compute_crop(&f.gaze, window, &ctx.intr)?;
            let crop = f.image.crop(&win)?;
            let crop = if window == ctx.crop_size_px {
                crop
            } else {
                crop.resize_bilinear(ctx.crop_size_px)
            };
            w.push(f.frame_idx, &crop, (f.gaze.x, f.gaze.y), f.target_object, f.holding)?;
        }
        if w.records.is_empty() {
            return Err(StreamError::NoLabeledFrames);
        }
        w.finish(ctx, self.kind())
    }
}

/// Ignores the session and passes through blank-background oracle views.
struct BlankBackgroundStream;

impl StreamStrategy for BlankBackgroundStream {
    fn kind(&self) -> StrategyKind {
        StrategyKind::BlankBackground
    }

    fn build(&self, _session: &[FrameRecord], ctx: &StreamBuildContext) -> Result<StreamManifest, StreamError> {
        let views = generate_oracle_views(
            ctx.objects,
            ctx.oracle_views.max(1),
            Background::Blank,
            &ctx.intr,
            ctx.crop_size_px,
            0.0,
            ctx.stream_seed,
        );
        let center = ctx.crop_size_px as f64 / 2.0;
        let mut w = StreamWriter::create(ctx, self.kind())?;
        for (i, v) in views.iter().enumerate() {
            w.push(i, &v.image, (center, center), Some(v.object_id), false)?;
        }
        w.finish(ctx, self.kind())
    }
}
