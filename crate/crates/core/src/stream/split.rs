//! Train/test splitting with a temporal guard gap.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::manifest::StreamManifest;
use super::StreamError;

/// Test frames closer than this (seconds) to any train frame are dropped.
pub const GUARD_GAP_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitUnit {
    Session,
    FrameBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub split_seed: u64,
    pub unit: SplitUnit,
}

/// Split one manifest into train/test along the time axis. The test portion
/// is a contiguous window whose position is seeded; test records within the
/// guard gap of a train record are dropped, so the two sides are disjoint and
/// exhaustive up to the gap.
pub fn split_frames(
    m: &StreamManifest,
    spec: &SplitSpec,
) -> Result<(StreamManifest, StreamManifest), StreamError> {
    if m.records.len() < 2 {
        return Err(StreamError::DegenerateManifest(m.records.len()));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(StreamError::BadFraction(spec.train_fraction));
    }
    let n = m.records.len();
    let test_len = ((1.0 - spec.train_fraction) * n as f64).ceil() as usize;
    let test_len = test_len.clamp(1, n - 1);
    let mut rng = ChaCha12Rng::seed_from_u64(spec.split_seed ^ 0x51e1_7000u64);
    let start = rng.gen_range(0..=n - test_len);
    let test_range = start..start + test_len;

    let mut train = Vec::with_capacity(n - test_len);
    let mut test = Vec::with_capacity(test_len);
    for (i, r) in m.records.iter().enumerate() {
        if test_range.contains(&i) {
            test.push(r.clone());
        } else {
            train.push(r.clone());
        }
    }
    // guard gap: drop test records too close in time to the train side
    let lo_edge = if start > 0 { Some(m.records[start - 1].time_s) } else { None };
    let hi_edge = if start + test_len < n { Some(m.records[start + test_len].time_s) } else { None };
    test.retain(|r| {
        let near_lo = lo_edge.map(|t| (r.time_s - t).abs() <= GUARD_GAP_S).unwrap_or(false);
        let near_hi = hi_edge.map(|t| (t - r.time_s).abs() <= GUARD_GAP_S).unwrap_or(false);
        !(near_lo || near_hi)
    });

    let wrap = |records| StreamManifest {
        session_id: m.session_id.clone(),
        intr: m.intr,
        strategy: m.strategy,
        crop_size_px: m.crop_size_px,
        records,
    };
    Ok((wrap(train), wrap(test)))
}

/// Split whole sessions: deterministic seeded shuffle, train gets
/// `round(fraction * n)` sessions (at least 1 on each side).
pub fn split_sessions(
    manifests: &[StreamManifest],
    spec: &SplitSpec,
) -> Result<(Vec<StreamManifest>, Vec<StreamManifest>), StreamError> {
    if manifests.len() < 2 {
        return Err(StreamError::DegenerateManifest(manifests.len()));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(StreamError::BadFraction(spec.train_fraction));
    }
    let mut order: Vec<usize> = (0..manifests.len()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(spec.split_seed ^ 0x05e5_5021);
    order.shuffle(&mut rng);
    let n_train = ((spec.train_fraction * manifests.len() as f64).round() as usize)
        .clamp(1, manifests.len() - 1);
    let train = order[..n_train].iter().map(|&i| manifests[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| manifests[i].clone()).collect();
    Ok((train, test))
}
