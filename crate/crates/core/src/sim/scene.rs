//! Tabletop world state: object poses, head-motion camera pan, background
//! clutter, and occasional hand-like occluders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::deg_to_px;
use crate::img::{LabelMask, RgbImage};

use super::glyph::{draw_object, point_in_object, ObjectSpec};
use super::{Background, SessionConfig};

/// Per-frame view sweep rate of a held object, in view-family units per second.
pub const HELD_ROTATION_PER_S: f32 = 0.35;
/// Scale factor applied to a held object (rendered nearer).
pub const HELD_SCALE: f32 = 1.35;
/// Mean-reversion rate of the positional drift (per frame).
const DRIFT_THETA: f64 = 0.02;
/// Per-frame positional drift innovation, px. Kept small so that gaze
/// tracking a drifting object stays well below the saccade detector's T1.
const DRIFT_SIGMA: f64 = 0.08;
/// Per-frame view-parameter drift of unheld objects.
const VIEW_SIGMA: f32 = 0.015;
/// Amplitude (px) and period (s) of the smooth manipulation wobble applied
/// to a held object; the bounded velocity keeps tracking below T2.
const HOLD_WOBBLE_AMP_PX: f64 = 2.0;
const HOLD_WOBBLE_PERIOD_S: f64 = 2.1;
/// Mean gap between occluder events, seconds.
const OCCLUDER_MEAN_GAP_S: f64 = 12.0;
const OCCLUDER_DURATION_S: f64 = 0.6;

#[derive(Debug, Clone)]
pub struct ObjPose {
    /// World coordinates, px.
    pub pos: (f64, f64),
    /// Unwrapped view parameter (the renderer wraps mod 1).
    pub view: f32,
    pub scale: f32,
}

#[derive(Debug, Clone)]
struct Occluder {
    start_frame: usize,
    end_frame: usize,
    from: (f64, f64),
    to: (f64, f64),
    half: (f64, f64),
}

/// Full world state for one frame; everything `render_frame` needs.
pub struct World {
    pub objects: Vec<ObjectSpec>,
    pub poses: Vec<ObjPose>,
    pub held: Option<usize>,
    pub frame_idx: usize,
    /// Camera pan offset in world px (frame = world - cam).
    pub cam: (f64, f64),
    home: Vec<(f64, f64)>,
    margin: f64,
    bg: BackgroundField,
    occluder: Option<Occluder>,
    next_occluder_frame: usize,
    drift_rng: ChaCha12Rng,
    occ_rng: ChaCha12Rng,
    pan_px: f64,
}

/// Static procedural background evaluated in world coordinates; black when blank.
struct BackgroundField {
    blank: bool,
    waves: Vec<(f32, f32, f32, f32)>, // (kx, ky, phase, amp)
    blobs: Vec<(f64, f64, f64, [f32; 3])>, // (x, y, radius, color)
}

impl BackgroundField {
    fn new(kind: Background, seed: u64, width: f64, height: f64) -> Self {
        match kind {
            Background::Blank => Self { blank: true, waves: vec![], blobs: vec![] },
            Background::Clutter => {
                let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xbac4_9700u64);
                let waves = (0..4)
                    .map(|_| {
                        (
                            rng.gen_range(0.05f32..0.5),
                            rng.gen_range(0.05f32..0.5),
                            rng.gen_range(0.0f32..std::f32::consts::TAU),
                            rng.gen_range(0.02f32..0.05),
                        )
                    })
                    .collect();
                let blobs = (0..10)
                    .map(|_| {
                        let base = rng.gen_range(0.10f32..0.22);
                        let tint = [
                            base + rng.gen_range(0.0..0.08),
                            base + rng.gen_range(0.0..0.06),
                            base + rng.gen_range(0.0..0.05),
                        ];
                        (
                            rng.gen_range(-0.2 * width..1.2 * width),
                            rng.gen_range(-0.2 * height..1.2 * height),
                            rng.gen_range(4.0..12.0),
                            tint,
                        )
                    })
                    .collect();
                Self { blank: false, waves, blobs }
            }
        }
    }

    fn sample(&self, wx: f64, wy: f64) -> [f32; 3] {
        if self.blank {
            return [0.0, 0.0, 0.0];
        }
        let mut v = 0.18f32;
        for &(kx, ky, ph, amp) in &self.waves {
            v += amp * (kx * wx as f32 + ky * wy as f32 + ph).sin();
        }
        let mut rgb = [v, v * 0.96, v * 0.9];
        for &(bx, by, r, tint) in &self.blobs {
            let d2 = (wx - bx).powi(2) + (wy - by).powi(2);
            if d2 < r * r {
                let w = (1.0 - (d2 / (r * r)) as f32).clamp(0.0, 1.0) * 0.8;
                for c in 0..3 {
                    rgb[c] = rgb[c] * (1.0 - w) + tint[c] * w;
                }
            }
        }
        rgb
    }
}

impl World {
    pub fn new(cfg: &SessionConfig, objects: Vec<ObjectSpec>) -> Self {
        let w = cfg.intr.width_px as f64;
        let h = cfg.intr.height_px as f64;
        let pan_px = deg_to_px(cfg.head_motion.amplitude_deg.max(1e-6), &cfg.intr).unwrap_or(0.0);
        let max_radius = objects
            .iter()
            .map(|o| o.size_px * HELD_SCALE * 0.65)
            .fold(0.0f32, f32::max) as f64;
        let margin = (pan_px + max_radius + 2.0).min(w.min(h) * 0.35);

        let mut place_rng = ChaCha12Rng::seed_from_u64(cfg.render_seed ^ 0x5ce7_e001);
        let min_dist = objects.first().map(|o| o.size_px as f64 * 1.25).unwrap_or(8.0);
        let mut home: Vec<(f64, f64)> = Vec::with_capacity(objects.len());
        for _ in 0..objects.len() {
            let mut best = (w / 2.0, h / 2.0);
            for attempt in 0..200 {
                let cand = (
                    place_rng.gen_range(margin..w - margin),
                    place_rng.gen_range(margin..h - margin),
                );
                let ok = home
                    .iter()
                    .all(|p| ((p.0 - cand.0).powi(2) + (p.1 - cand.1).powi(2)).sqrt() >= min_dist);
                best = cand;
                if ok || attempt == 199 {
                    break;
                }
            }
            home.push(best);
        }

        let mut view_rng = ChaCha12Rng::seed_from_u64(cfg.render_seed ^ 0x71e3_0002);
        let poses = home
            .iter()
            .map(|&p| ObjPose { pos: p, view: view_rng.gen_range(0.0f32..1.0), scale: 1.0 })
            .collect();

        let mut occ_rng = ChaCha12Rng::seed_from_u64(cfg.render_seed ^ 0x0cc1_0003);
        let first_occ = (occ_rng.gen_range(2.0..2.0 * OCCLUDER_MEAN_GAP_S) * cfg.intr.fps) as usize;

        Self {
            bg: BackgroundField::new(cfg.background, cfg.render_seed, w, h),
            objects,
            poses,
            held: None,
            frame_idx: 0,
            cam: (0.0, 0.0),
            home,
            margin,
            occluder: None,
            next_occluder_frame: first_occ,
            drift_rng: ChaCha12Rng::seed_from_u64(cfg.render_seed ^ 0xd21f_0004),
            occ_rng,
            pan_px,
        }
    }

    /// Frame coordinates of an object's center.
    pub fn object_center(&self, idx: usize) -> (f64, f64) {
        let p = self.poses[idx].pos;
        (p.0 - self.cam.0, p.1 - self.cam.1)
    }

    /// Reflect the current `held` assignment in object scales so the frame
    /// being rendered already shows the held object nearer.
    pub fn apply_hold_scale(&mut self) {
        for i in 0..self.poses.len() {
            self.poses[i].scale = if self.held == Some(i) { HELD_SCALE } else { 1.0 };
        }
    }

    /// Advance dynamics to `frame_idx` + 1: camera pan, positional drift,
    /// view drift, held-object rotation, occluder schedule.
    pub fn step(&mut self, cfg: &SessionConfig) {
        self.frame_idx += 1;
        let t = self.frame_idx as f64 / cfg.intr.fps;
        let period = cfg.head_motion.period_s.max(1e-6);
        let phase = std::f64::consts::TAU * t / period;
        self.cam = (self.pan_px * phase.sin(), 0.6 * self.pan_px * (phase + 1.3).sin());

        let normal = Normal::new(0.0f64, DRIFT_SIGMA).unwrap();
        let vnormal = Normal::new(0.0f32, VIEW_SIGMA).unwrap();
        let w = cfg.intr.width_px as f64;
        let h = cfg.intr.height_px as f64;
        let omega = std::f64::consts::TAU / (HOLD_WOBBLE_PERIOD_S * cfg.intr.fps);
        let f = self.frame_idx as f64;
        for i in 0..self.poses.len() {
            let home = self.home[i];
            let held = self.held == Some(i);
            let pose = &mut self.poses[i];
            pose.pos.0 += DRIFT_THETA * (home.0 - pose.pos.0) + normal.sample(&mut self.drift_rng);
            pose.pos.1 += DRIFT_THETA * (home.1 - pose.pos.1) + normal.sample(&mut self.drift_rng);
            let dv = vnormal.sample(&mut self.drift_rng);
            if held {
                pose.view += HELD_ROTATION_PER_S / cfg.intr.fps as f32;
                pose.scale = HELD_SCALE;
                // smooth manipulation wobble, velocity bounded under T2
                pose.pos.0 += HOLD_WOBBLE_AMP_PX * omega * (omega * f).cos();
                pose.pos.1 += 0.7 * HOLD_WOBBLE_AMP_PX * omega * (1.3 * omega * f + 0.9).cos();
            } else {
                pose.view += dv;
                pose.scale = 1.0;
            }
            pose.pos.0 = pose.pos.0.clamp(self.margin, w - self.margin);
            pose.pos.1 = pose.pos.1.clamp(self.margin, h - self.margin);
        }

        // occluder lifecycle
        if let Some(occ) = &self.occluder {
            if self.frame_idx >= occ.end_frame {
                self.occluder = None;
            }
        }
        if self.occluder.is_none() && self.frame_idx >= self.next_occluder_frame {
            let frames = (OCCLUDER_DURATION_S * cfg.intr.fps) as usize;
            let y = self.occ_rng.gen_range(0.2 * h..0.8 * h);
            let from_left: bool = self.occ_rng.gen();
            let (x0, x1) = if from_left { (-10.0, w * 0.6) } else { (w + 10.0, w * 0.4) };
            self.occluder = Some(Occluder {
                start_frame: self.frame_idx,
                end_frame: self.frame_idx + frames.max(2),
                from: (x0, y),
                to: (x1, y + self.occ_rng.gen_range(-8.0..8.0)),
                half: (9.0, 5.0),
            });
            let gap = self.occ_rng.gen_range(0.5..1.5) * OCCLUDER_MEAN_GAP_S;
            self.next_occluder_frame = self.frame_idx + (gap * cfg.intr.fps) as usize;
        }
    }

    /// Object id (not index) at a continuous frame position, topmost first.
    /// The held object renders on top; otherwise higher index wins.
    pub fn object_at(&self, fx: f64, fy: f64) -> Option<u32> {
        let p = ((fx.floor() + 0.5) as f32, (fy.floor() + 0.5) as f32);
        let order = self.render_order();
        for &i in order.iter().rev() {
            let c = self.object_center(i);
            let pose = &self.poses[i];
            if point_in_object(&self.objects[i], c, pose.view, pose.scale, p) {
                return Some(self.objects[i].object_id);
            }
        }
        None
    }

    fn render_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.objects.len()).collect();
        if let Some(h) = self.held {
            order.retain(|&i| i != h);
            order.push(h);
        }
        order
    }

    /// Rasterize the frame; optionally produce the object-id label mask.
    /// Occluders draw over objects but do not alter the label mask.
    pub fn render(&self, cfg: &SessionConfig, want_mask: bool) -> (RgbImage, Option<LabelMask>) {
        let (w, h) = (cfg.intr.width_px, cfg.intr.height_px);
        let mut img = RgbImage::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let rgb = self.bg.sample(x as f64 + 0.5 + self.cam.0, y as f64 + 0.5 + self.cam.1);
                img.set(x, y, rgb);
            }
        }
        let mut mask = if want_mask { Some(LabelMask::new(w, h)) } else { None };
        for i in self.render_order() {
            let c = self.object_center(i);
            let pose = &self.poses[i];
            draw_object(&mut img, mask.as_mut(), &self.objects[i], c, pose.view, pose.scale);
        }
        if let Some(occ) = &self.occluder {
            let total = (occ.end_frame - occ.start_frame).max(1) as f64;
            let s = (self.frame_idx - occ.start_frame) as f64 / total;
            let cx = occ.from.0 + (occ.to.0 - occ.from.0) * s;
            let cy = occ.from.1 + (occ.to.1 - occ.from.1) * s;
            let x0 = ((cx - occ.half.0).floor().max(0.0)) as u32;
            let x1 = ((cx + occ.half.0).ceil().min(w as f64)) as u32;
            let y0 = ((cy - occ.half.1).floor().max(0.0)) as u32;
            let y1 = ((cy + occ.half.1).ceil().min(h as f64)) as u32;
            for y in y0..y1 {
                for x in x0..x1 {
                    img.blend(x, y, [0.45, 0.34, 0.28], 0.9);
                }
            }
        }
        (img, mask)
    }
}
