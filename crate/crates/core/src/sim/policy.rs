//! Gaze-behavior strategies. Each policy kind is a [`GazeBehavior`]
//! implementation looked up by name; natural (toddler/adult-like) behavior
//! alternates object looks, holds, and background fixations, while the
//! degenerate policies ignore the scene.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{deg_to_px, GazePoint};

use super::scene::World;
use super::SessionConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    ToddlerLike,
    AdultLike,
    Random,
    NoEyeMovement,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::ToddlerLike => "toddler-like",
            PolicyKind::AdultLike => "adult-like",
            PolicyKind::Random => "random",
            PolicyKind::NoEyeMovement => "no-eye-movement",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "toddler-like" => Some(PolicyKind::ToddlerLike),
            "adult-like" => Some(PolicyKind::AdultLike),
            "random" => Some(PolicyKind::Random),
            "no-eye-movement" => Some(PolicyKind::NoEyeMovement),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazePolicy {
    pub kind: PolicyKind,
    pub mean_fixation_s: f64,
    pub mean_look_bout_s: f64,
    pub mean_hold_look_s: f64,
    pub saccade_amplitude_deg: f64,
    pub policy_seed: u64,
}

impl GazePolicy {
    pub fn toddler_like(seed: u64) -> Self {
        Self {
            kind: PolicyKind::ToddlerLike,
            mean_fixation_s: 0.5,
            mean_look_bout_s: 1.2,
            mean_hold_look_s: 3.0,
            saccade_amplitude_deg: 20.0,
            policy_seed: seed,
        }
    }

    pub fn adult_like(seed: u64) -> Self {
        Self {
            kind: PolicyKind::AdultLike,
            mean_fixation_s: 0.4,
            mean_look_bout_s: 1.0,
            mean_hold_look_s: 1.2,
            saccade_amplitude_deg: 20.0,
            policy_seed: seed,
        }
    }

    pub fn random(seed: u64) -> Self {
        Self {
            kind: PolicyKind::Random,
            mean_fixation_s: 0.5,
            mean_look_bout_s: 1.0,
            mean_hold_look_s: 1.0,
            saccade_amplitude_deg: 20.0,
            policy_seed: seed,
        }
    }
}

/// Per-frame output of a gaze behavior.
pub struct GazeDecision {
    pub gaze: GazePoint,
    /// Object index (into the world's object list) held this frame, if any.
    pub hold: Option<usize>,
}

/// A gaze strategy driven one frame at a time against the evolving world.
pub trait GazeBehavior {
    fn name(&self) -> &'static str;
    fn next(&mut self, cfg: &SessionConfig, world: &World) -> GazeDecision;
}

/// Build the behavior registered for the policy's kind.
///
/// `NoEyeMovement` is resolved one level up (it replays a toddler-like
/// trace and substitutes the centroid), so it maps to the natural behavior
/// here and the caller post-processes the gaze.
pub fn behavior_for(policy: &GazePolicy) -> Box<dyn GazeBehavior> {
    match policy.kind {
        PolicyKind::ToddlerLike | PolicyKind::AdultLike | PolicyKind::NoEyeMovement => {
            Box::new(NaturalGaze::new(policy))
        }
        PolicyKind::Random => Box::new(RandomGazeBehavior::new(policy)),
    }
}

/// Probability that an object look bout is a holding bout.
pub const HOLD_PROB: f64 = 0.5;
/// Probability that a bout fixates background instead of an object.
const BACKGROUND_PROB: f64 = 0.15;
/// AR(1) coefficient of the fixation jitter process.
const JITTER_AR: f64 = 0.9;
/// Stationary jitter amplitude, degrees of visual angle.
const JITTER_SIGMA_DEG: f64 = 0.3;
/// Minimum within-object refixation displacement, degrees. Refixation
/// saccades span 2 transit frames (3 inter-sample gaps), so this keeps their
/// per-sample velocity near 30 deg/s, above the detector's T1 = 25 deg/s.
const REFIX_MIN_DEG: f64 = 2.9;

enum Phase {
    /// Ballistic transit: remaining gaze positions to emit.
    Saccade(Vec<(f64, f64)>),
    Fixating,
}

struct Bout {
    target: BoutTarget,
    holding: bool,
    frames_left: usize,
}

#[derive(Clone, Copy)]
enum BoutTarget {
    Object(usize),
    Background(f64, f64), // world coords
}

struct NaturalGaze {
    rng: ChaCha12Rng,
    mean_fix: f64,
    mean_look: f64,
    mean_hold: f64,
    bout: Option<Bout>,
    phase: Phase,
    fix_frames_left: usize,
    fix_offset: (f64, f64),
    jitter: (f64, f64),
    last_gaze: (f64, f64),
}

impl NaturalGaze {
    fn new(policy: &GazePolicy) -> Self {
        Self {
            rng: ChaCha12Rng::seed_from_u64(policy.policy_seed ^ 0x9a2e_0001),
            mean_fix: policy.mean_fixation_s.max(1e-3),
            mean_look: policy.mean_look_bout_s.max(1e-3),
            mean_hold: policy.mean_hold_look_s.max(1e-3),
            bout: None,
            phase: Phase::Fixating,
            fix_frames_left: 0,
            fix_offset: (0.0, 0.0),
            jitter: (0.0, 0.0),
            last_gaze: (0.0, 0.0),
        }
    }

    fn draw_frames(&mut self, mean_s: f64, fps: f64) -> usize {
        let exp = Exp::new(1.0 / mean_s).unwrap();
        let dur: f64 = exp.sample(&mut self.rng);
        ((dur * fps).round() as usize).max(2)
    }

    fn plan_bout(&mut self, cfg: &SessionConfig, world: &World) -> Bout {
        let fps = cfg.intr.fps;
        if self.rng.gen_bool(BACKGROUND_PROB) || world.objects.is_empty() {
            let m = 2.0;
            let x = self.rng.gen_range(m..cfg.intr.width_px as f64 - m);
            let y = self.rng.gen_range(m..cfg.intr.height_px as f64 - m);
            let frames = self.draw_frames(self.mean_fix, fps);
            return Bout {
                target: BoutTarget::Background(x + world.cam.0, y + world.cam.1),
                holding: false,
                frames_left: frames,
            };
        }
        let obj = self.rng.gen_range(0..world.objects.len());
        let holding = self.rng.gen_bool(HOLD_PROB);
        let mean = if holding { self.mean_hold } else { self.mean_look };
        let frames = self.draw_frames(mean, fps);
        Bout { target: BoutTarget::Object(obj), holding, frames_left: frames }
    }

    fn fixation_anchor(&self, world: &World, cfg: &SessionConfig, target: BoutTarget) -> (f64, f64) {
        let (w, h) = (cfg.intr.width_px as f64, cfg.intr.height_px as f64);
        let raw = match target {
            BoutTarget::Object(i) => {
                let c = world.object_center(i);
                (c.0 + self.fix_offset.0, c.1 + self.fix_offset.1)
            }
            BoutTarget::Background(wx, wy) => (wx - world.cam.0, wy - world.cam.1),
        };
        (raw.0.clamp(0.0, w - 1e-3), raw.1.clamp(0.0, h - 1e-3))
    }

    fn draw_fix_offset(&mut self, cfg: &SessionConfig, world: &World, target: BoutTarget) -> (f64, f64) {
        let BoutTarget::Object(i) = target else { return (0.0, 0.0) };
        let obj = &world.objects[i];
        let radius = (obj.size_px * world.poses[i].scale) as f64 * 0.5;
        let (q_lo, q_hi) = crate::sim::glyph::anchor_radius_range(obj.shape_family);
        if q_lo > 0.0 {
            // annular anchor band (hollow glyph): step the angle so the
            // transit chord stays on the band
            let prev = self.fix_offset;
            let prev_phi = prev.1.atan2(prev.0);
            let step = self.rng.gen_range(0.35..0.8) * if self.rng.gen::<bool>() { 1.0 } else { -1.0 };
            let phi = if prev == (0.0, 0.0) {
                self.rng.gen_range(0.0..std::f64::consts::TAU)
            } else {
                prev_phi + step
            };
            let q = self.rng.gen_range(q_lo..q_hi) * radius;
            return (q * phi.cos(), q * phi.sin());
        }
        let max_off = radius * q_hi;
        let min_jump = deg_to_px(REFIX_MIN_DEG, &cfg.intr).unwrap_or(2.5).min(max_off * 1.6);
        let prev = self.fix_offset;
        let mut best = prev;
        for _ in 0..12 {
            let ang = self.rng.gen_range(0.0..std::f64::consts::TAU);
            let r = self.rng.gen_range(0.0..max_off);
            let cand = (r * ang.cos(), r * ang.sin());
            best = cand;
            let jump = ((cand.0 - prev.0).powi(2) + (cand.1 - prev.1).powi(2)).sqrt();
            if jump >= min_jump {
                break;
            }
        }
        best
    }

    fn start_saccade(&mut self, to: (f64, f64), k: usize) {
        let from = self.last_gaze;
        let path = (1..=k)
            .map(|i| {
                let s = i as f64 / (k + 1) as f64;
                (from.0 + (to.0 - from.0) * s, from.1 + (to.1 - from.1) * s)
            })
            .collect();
        self.phase = Phase::Saccade(path);
    }
}

impl GazeBehavior for NaturalGaze {
    fn name(&self) -> &'static str {
        "natural"
    }

    fn next(&mut self, cfg: &SessionConfig, world: &World) -> GazeDecision {
        let fps = cfg.intr.fps;
        let sigma_px = deg_to_px(JITTER_SIGMA_DEG, &cfg.intr).unwrap_or(0.25);
        let innov = Normal::new(0.0, sigma_px * (1.0 - JITTER_AR * JITTER_AR).sqrt()).unwrap();
        self.jitter.0 = JITTER_AR * self.jitter.0 + innov.sample(&mut self.rng);
        self.jitter.1 = JITTER_AR * self.jitter.1 + innov.sample(&mut self.rng);

        // bout over: plan the next one and launch a between-target saccade
        if self.bout.as_ref().map(|b| b.frames_left == 0).unwrap_or(true) {
            let next = self.plan_bout(cfg, world);
            self.fix_offset = (0.0, 0.0);
            self.fix_offset = self.draw_fix_offset(cfg, world, next.target);
            self.fix_frames_left = self.draw_frames(self.mean_fix, fps).min(next.frames_left.max(2));
            let anchor = self.fixation_anchor(world, cfg, next.target);
            let launch = self.bout.is_some();
            self.bout = Some(next);
            if launch {
                let k = self.rng.gen_range(2..=3usize);
                self.start_saccade(anchor, k);
            }
        } else if matches!(self.phase, Phase::Fixating) && self.fix_frames_left == 0 {
            // refixation within the bout: short 2-frame transit
            let (target, frames_left) = {
                let b = self.bout.as_ref().expect("bout exists");
                (b.target, b.frames_left)
            };
            self.fix_offset = self.draw_fix_offset(cfg, world, target);
            self.fix_frames_left = self.draw_frames(self.mean_fix, fps).min(frames_left.max(2));
            let anchor = self.fixation_anchor(world, cfg, target);
            self.start_saccade(anchor, 2);
        }

        let (target, holding) = {
            let b = self.bout.as_ref().expect("bout planned above");
            (b.target, b.holding)
        };

        let (gaze, in_transit) = match &mut self.phase {
            Phase::Saccade(path) if !path.is_empty() => (path.remove(0), true),
            Phase::Saccade(_) => {
                self.phase = Phase::Fixating;
                (self.fixation_anchor(world, cfg, target), false)
            }
            Phase::Fixating => (self.fixation_anchor(world, cfg, target), false),
        };

        let frames_left = {
            let b = self.bout.as_mut().expect("bout planned above");
            if !in_transit {
                b.frames_left = b.frames_left.saturating_sub(1);
                self.fix_frames_left = self.fix_frames_left.saturating_sub(1);
            }
            b.frames_left
        };

        let (w, h) = (cfg.intr.width_px as f64, cfg.intr.height_px as f64);
        let gx = (gaze.0 + if in_transit { 0.0 } else { self.jitter.0 }).clamp(0.0, w - 1e-3);
        let gy = (gaze.1 + if in_transit { 0.0 } else { self.jitter.1 }).clamp(0.0, h - 1e-3);
        self.last_gaze = (gx, gy);

        let hold = match (in_transit, holding, target) {
            (false, true, BoutTarget::Object(i)) => Some(i),
            // the object stays in hand through within-bout transits
            (true, true, BoutTarget::Object(i)) if frames_left > 0 => Some(i),
            _ => None,
        };
        GazeDecision { gaze: GazePoint::new(gx, gy), hold }
    }
}

/// Uniform random gaze each frame; ignores all duration fields.
struct RandomGazeBehavior {
    rng: ChaCha12Rng,
}

impl RandomGazeBehavior {
    fn new(policy: &GazePolicy) -> Self {
        Self { rng: ChaCha12Rng::seed_from_u64(policy.policy_seed ^ 0x7a4d_0002) }
    }
}

impl GazeBehavior for RandomGazeBehavior {
    fn name(&self) -> &'static str {
        "random"
    }

    fn next(&mut self, cfg: &SessionConfig, _world: &World) -> GazeDecision {
        let x = self.rng.gen_range(0.0..cfg.intr.width_px as f64);
        let y = self.rng.gen_range(0.0..cfg.intr.height_px as f64);
        GazeDecision { gaze: GazePoint::new(x, y), hold: None }
    }
}
