//! Saccade/fixation detection by velocity thresholds and the behavioral
//! metrics derived from gaze traces and ground-truth object labels.
//!
//! Detection: per-sample angular velocity `v_i` is the angular distance from
//! sample `i` to `i+1` times the frame rate. Maximal runs with `v >= t1` form
//! core saccades; each core may absorb at most one adjacent sample per side
//! when that sample moves with `v >= t2` in a direction within `theta` of the
//! core's net displacement. Everything else is fixation. Gaps in the sampling
//! grid split the trace; events never span a gap.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angular_distance, CameraIntrinsics, GazePoint};

#[derive(Debug, Error)]
pub enum EventError {
    #[error("trace needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("invalid thresholds: require t1 > t2 > 0, got t1={t1}, t2={t2}")]
    BadThresholds { t1: f64, t2: f64 },
    #[error("invalid direction criterion: theta must be in (0, 180], got {0}")]
    BadTheta(f64),
    #[error("segmentation covers {seg} samples but labels cover {labels}")]
    LengthMismatch { seg: usize, labels: usize },
}

/// Velocity-detector defaults.
pub const DEFAULT_T1_DEG_S: f64 = 25.0;
pub const DEFAULT_T2_DEG_S: f64 = 10.0;
pub const DEFAULT_THETA_DEG: f64 = 45.0;

#[derive(Debug, Clone)]
pub struct GazeTrace {
    /// (time_s, gaze), strictly increasing in time, nominally 1/fps apart.
    pub samples: Vec<(f64, GazePoint)>,
    pub intr: CameraIntrinsics,
}

impl GazeTrace {
    pub fn from_points(points: Vec<GazePoint>, intr: CameraIntrinsics) -> Self {
        let samples = points
            .into_iter()
            .enumerate()
            .map(|(i, p)| (i as f64 / intr.fps, p))
            .collect();
        Self { samples, intr }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Fixation,
    Saccade,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    /// Inclusive sample range.
    pub start_idx: usize,
    pub end_idx: usize,
}

impl Event {
    pub fn len(&self) -> usize {
        self.end_idx - self.start_idx + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub struct EventSegmentation {
    pub labels: Vec<EventKind>,
    pub events: Vec<Event>,
}

/// Velocity-threshold saccade detection.
pub fn detect_saccades(
    trace: &GazeTrace,
    t1: f64,
    t2: f64,
    theta: f64,
) -> Result<EventSegmentation, EventError> {
    let n = trace.samples.len();
    if n < 2 {
        return Err(EventError::TooShort(n));
    }
    if !(t1 > t2 && t2 > 0.0) {
        return Err(EventError::BadThresholds { t1, t2 });
    }
    if !(theta > 0.0 && theta <= 180.0) {
        return Err(EventError::BadTheta(theta));
    }

    let fps = trace.intr.fps;
    let gap_limit = 1.5 / fps;
    // velocity of sample i = motion from i to i+1; gaps poison the transition
    let mut vel = vec![0.0f64; n - 1];
    let mut gap = vec![false; n - 1];
    for i in 0..n - 1 {
        let (ta, pa) = trace.samples[i];
        let (tb, pb) = trace.samples[i + 1];
        let dt = tb - ta;
        if dt > gap_limit {
            gap[i] = true;
            continue;
        }
        vel[i] = angular_distance(&pa, &pb, &trace.intr) / dt;
    }

    let mut is_sacc = vec![false; n];
    // core runs: maximal stretches of samples whose outgoing velocity >= t1
    let mut i = 0usize;
    while i < n - 1 {
        if gap[i] || vel[i] < t1 {
            i += 1;
            continue;
        }
        let start = i;
        while i < n - 1 && !gap[i] && vel[i] >= t1 {
            i += 1;
        }
        let core_end = i - 1; // last sample with high outgoing velocity
        for s in is_sacc.iter_mut().take(core_end + 1).skip(start) {
            *s = true;
        }
        // net displacement spans the core motion, landing sample included
        let net = displacement(trace, start, (core_end + 1).min(n - 1));
        // left neighbor: its motion leads into the core
        if start > 0 && !gap[start - 1] && vel[start - 1] >= t2 {
            let d = displacement(trace, start - 1, start);
            if within_angle(d, net, theta) {
                is_sacc[start - 1] = true;
            }
        }
        // right neighbor: the landing sample's own outgoing motion
        let landing = core_end + 1;
        if landing < n - 1 && !gap[landing] && vel[landing] < t1 && vel[landing] >= t2 {
            let d = displacement(trace, landing, landing + 1);
            if within_angle(d, net, theta) {
                is_sacc[landing] = true;
            }
        }
    }

    let labels: Vec<EventKind> = is_sacc
        .iter()
        .map(|&s| if s { EventKind::Saccade } else { EventKind::Fixation })
        .collect();
    let mut events = Vec::new();
    let mut start = 0usize;
    for i in 1..=n {
        if i == n || labels[i] != labels[start] {
            events.push(Event { kind: labels[start], start_idx: start, end_idx: i - 1 });
            start = i;
        }
    }
    Ok(EventSegmentation { labels, events })
}

fn displacement(trace: &GazeTrace, from: usize, to: usize) -> (f64, f64) {
    let a = trace.samples[from].1;
    let b = trace.samples[to].1;
    (b.x - a.x, b.y - a.y)
}

fn within_angle(d: (f64, f64), net: (f64, f64), theta_deg: f64) -> bool {
    let la = (d.0 * d.0 + d.1 * d.1).sqrt();
    let lb = (net.0 * net.0 + net.1 * net.1).sqrt();
    if la < 1e-12 || lb < 1e-12 {
        return false;
    }
    let cos = ((d.0 * net.0 + d.1 * net.1) / (la * lb)).clamp(-1.0, 1.0);
    cos.acos().to_degrees() <= theta_deg
}

/// Per-frame semantic labels used by the behavioral metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameLabel {
    pub target_object: Option<u32>,
    pub holding: bool,
}

/// Empty averages are reported as absent, never zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorMetrics {
    pub mean_fixation_s: Option<f64>,
    pub mean_look_bout_s: Option<f64>,
    pub mean_hold_look_s: Option<f64>,
    pub cumulative_look_s: f64,
    pub mean_saccade_s: Option<f64>,
}

/// Fixation/saccade durations from the segmentation plus look-bout statistics
/// from ground-truth labels. Look bouts are maximal runs of frames sharing
/// one `target_object`, split by the holding flag.
pub fn compute_metrics(
    seg: &EventSegmentation,
    labels: &[FrameLabel],
    fps: f64,
) -> Result<BehaviorMetrics, EventError> {
    if seg.labels.len() != labels.len() {
        return Err(EventError::LengthMismatch { seg: seg.labels.len(), labels: labels.len() });
    }
    let mean_of = |xs: &[f64]| {
        if xs.is_empty() {
            None
        } else {
            Some(xs.iter().sum::<f64>() / xs.len() as f64)
        }
    };

    let fix: Vec<f64> = seg
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Fixation)
        .map(|e| e.len() as f64 / fps)
        .collect();
    let sac: Vec<f64> = seg
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Saccade)
        .map(|e| e.len() as f64 / fps)
        .collect();

    let mut look = Vec::new();
    let mut hold_look = Vec::new();
    let mut i = 0usize;
    while i < labels.len() {
        let Some(obj) = labels[i].target_object else {
            i += 1;
            continue;
        };
        let holding = labels[i].holding;
        let start = i;
        while i < labels.len()
            && labels[i].target_object == Some(obj)
            && labels[i].holding == holding
        {
            i += 1;
        }
        let dur = (i - start) as f64 / fps;
        if holding {
            hold_look.push(dur);
        } else {
            look.push(dur);
        }
    }
    let cumulative = labels.iter().filter(|l| l.target_object.is_some()).count() as f64 / fps;

    Ok(BehaviorMetrics {
        mean_fixation_s: mean_of(&fix),
        mean_look_bout_s: mean_of(&look),
        mean_hold_look_s: mean_of(&hold_look),
        cumulative_look_s: cumulative,
        mean_saccade_s: mean_of(&sac),
    })
}

/// 2-D spatial histogram of gaze samples; counts always sum to the number of
/// samples (all positions clamp into the grid).
pub fn gaze_histogram(trace: &GazeTrace, bins_x: usize, bins_y: usize) -> Histogram2d {
    assert!(bins_x >= 1 && bins_y >= 1, "need at least one bin per axis");
    let mut counts = vec![0u64; bins_x * bins_y];
    let w = trace.intr.width_px as f64;
    let h = trace.intr.height_px as f64;
    for (_, p) in &trace.samples {
        let bx = ((p.x / w * bins_x as f64) as usize).min(bins_x - 1);
        let by = ((p.y / h * bins_y as f64) as usize).min(bins_y - 1);
        counts[by * bins_x + bx] += 1;
    }
    Histogram2d { bins_x, bins_y, counts }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram2d {
    pub bins_x: usize,
    pub bins_y: usize,
    pub counts: Vec<u64>,
}

impl Histogram2d {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(640, 480, 72.0, 30.0).unwrap()
    }

    fn trace_of(points: &[(f64, f64)]) -> GazeTrace {
        GazeTrace::from_points(
            points.iter().map(|&(x, y)| GazePoint::new(x, y)).collect(),
            intr(),
        )
    }

    /// degrees to pixels on this camera
    fn px(deg: f64) -> f64 {
        deg * 640.0 / 72.0
    }

    #[test]
    fn stationary_trace_is_one_fixation() {
        let t = trace_of(&[(100.0, 100.0); 20]);
        let seg = detect_saccades(&t, 25.0, 10.0, 45.0).unwrap();
        assert_eq!(seg.events.len(), 1);
        assert_eq!(seg.events[0].kind, EventKind::Fixation);
        assert_eq!(seg.events[0].len(), 20);
    }

    #[test]
    fn single_jump_gives_one_saccade_event() {
        // stationary, one 3-degree jump between samples 5 and 6 (v = 90 deg/s)
        let mut pts = vec![(100.0, 100.0); 6];
        pts.extend(vec![(100.0 + px(3.0), 100.0); 6]);
        let t = trace_of(&pts);
        let seg = detect_saccades(&t, 25.0, 10.0, 45.0).unwrap();
        let saccades: Vec<_> = seg.events.iter().filter(|e| e.kind == EventKind::Saccade).collect();
        assert_eq!(saccades.len(), 1);
        assert_eq!(saccades[0].start_idx, 5);
        assert_eq!(saccades[0].end_idx, 5);
    }

    #[test]
    fn slow_lead_in_sample_is_absorbed() {
        // the sample before the jump moves 0.5 deg toward it (15 deg/s >= t2)
        let lead = px(0.5);
        let mut pts = vec![(100.0, 100.0); 5];
        pts.push((100.0 + lead, 100.0)); // sample 5; jump follows
        pts.extend(vec![(100.0 + lead + px(3.0), 100.0); 5]);
        let t = trace_of(&pts);
        let seg = detect_saccades(&t, 25.0, 10.0, 45.0).unwrap();
        let saccades: Vec<_> = seg.events.iter().filter(|e| e.kind == EventKind::Saccade).collect();
        assert_eq!(saccades.len(), 1);
        // sample 4 (lead-in, absorbed) and 5 (core) form the saccade
        assert_eq!(saccades[0].start_idx, 4);
        assert_eq!(saccades[0].end_idx, 5);
    }

    #[test]
    fn opposite_direction_neighbor_is_not_absorbed() {
        let lead = px(0.5);
        let mut pts = vec![(100.0, 100.0); 5];
        pts.push((100.0 - lead, 100.0)); // moves away from the jump direction
        pts.extend(vec![(100.0 - lead + px(3.0), 100.0); 5]);
        let t = trace_of(&pts);
        let seg = detect_saccades(&t, 25.0, 10.0, 45.0).unwrap();
        let saccades: Vec<_> = seg.events.iter().filter(|e| e.kind == EventKind::Saccade).collect();
        assert_eq!(saccades.len(), 1);
        assert_eq!(saccades[0].start_idx, 5);
        assert_eq!(saccades[0].end_idx, 5);
    }

    #[test]
    fn segmentation_partitions_and_alternates() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..50 {
            let pts: Vec<(f64, f64)> = (0..100)
                .map(|_| (rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0)))
                .collect();
            let t = trace_of(&pts);
            let seg = detect_saccades(&t, 25.0, 10.0, 45.0).unwrap();
            let total: usize = seg.events.iter().map(|e| e.len()).sum();
            assert_eq!(total, 100);
            for w in seg.events.windows(2) {
                assert_ne!(w[0].kind, w[1].kind, "adjacent events must alternate");
                assert_eq!(w[0].end_idx + 1, w[1].start_idx);
            }
        }
    }

    #[test]
    fn translation_invariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let pts: Vec<(f64, f64)> = (0..200)
            .map(|_| (rng.gen_range(100.0..400.0), rng.gen_range(100.0..300.0)))
            .collect();
        let shifted: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x + 37.0, y + 19.0)).collect();
        let a = detect_saccades(&trace_of(&pts), 25.0, 10.0, 45.0).unwrap();
        let b = detect_saccades(&trace_of(&shifted), 25.0, 10.0, 45.0).unwrap();
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn raising_t1_never_adds_saccade_samples() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pts: Vec<(f64, f64)> = (0..80)
                .map(|_| (rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0)))
                .collect();
            let t = trace_of(&pts);
            // extension rule disabled: theta tiny, t2 just under t1
            let count = |t1: f64| {
                detect_saccades(&t, t1, t1 * 0.999, 1e-9)
                    .unwrap()
                    .labels
                    .iter()
                    .filter(|&&k| k == EventKind::Saccade)
                    .count()
            };
            assert!(count(80.0) <= count(25.0), "raising t1 increased saccade samples");
        }
    }

    #[test]
    fn short_trace_is_rejected() {
        let t = trace_of(&[(0.0, 0.0)]);
        assert!(matches!(detect_saccades(&t, 25.0, 10.0, 45.0), Err(EventError::TooShort(1))));
    }

    #[test]
    fn metrics_fixation_and_cumulative() {
        // one 15-frame fixation at 30 fps, no object labels
        let t = trace_of(&[(50.0, 50.0); 15]);
        let seg = detect_saccades(&t, 25.0, 10.0, 45.0).unwrap();
        let labels = vec![FrameLabel { target_object: None, holding: false }; 15];
        let m = compute_metrics(&seg, &labels, 30.0).unwrap();
        assert_eq!(m.mean_fixation_s, Some(0.5));
        assert_eq!(m.cumulative_look_s, 0.0);
        assert_eq!(m.mean_saccade_s, None);
    }

    #[test]
    fn metrics_bout_arithmetic() {
        // 60 frames holding object A, 30 frames nothing, 30 frames object B not holding
        let mut labels = Vec::new();
        labels.extend(vec![FrameLabel { target_object: Some(0), holding: true }; 60]);
        labels.extend(vec![FrameLabel { target_object: None, holding: false }; 30]);
        labels.extend(vec![FrameLabel { target_object: Some(1), holding: false }; 30]);
        let t = trace_of(&[(50.0, 50.0); 120]);
        let seg = detect_saccades(&t, 25.0, 10.0, 45.0).unwrap();
        let m = compute_metrics(&seg, &labels, 30.0).unwrap();
        assert_eq!(m.mean_hold_look_s, Some(2.0));
        assert_eq!(m.mean_look_bout_s, Some(1.0));
        assert_eq!(m.cumulative_look_s, 3.0);
    }

    #[test]
    fn metrics_length_mismatch_is_error() {
        let t = trace_of(&[(50.0, 50.0); 10]);
        let seg = detect_saccades(&t, 25.0, 10.0, 45.0).unwrap();
        let labels = vec![FrameLabel { target_object: None, holding: false }; 9];
        assert!(compute_metrics(&seg, &labels, 30.0).is_err());
    }

    #[test]
    fn histogram_single_point_and_conservation() {
        let t = trace_of(&[(100.0, 100.0); 37]);
        let h = gaze_histogram(&t, 4, 4);
        assert_eq!(h.total(), 37);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);

        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let pts: Vec<(f64, f64)> = (0..500)
            .map(|_| (rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0)))
            .collect();
        let t = trace_of(&pts);
        assert_eq!(gaze_histogram(&t, 7, 3).total(), 500);
    }

    #[test]
    fn histogram_uniform_quarters() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let n = 100_000;
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0)))
            .collect();
        let t = trace_of(&pts);
        let h = gaze_histogram(&t, 2, 2);
        for &c in &h.counts {
            let frac = c as f64 / n as f64;
            assert!((frac - 0.25).abs() < 0.02, "cell fraction {frac}");
        }
    }
}
