//! Temporal pair sampling: anchors uniform over valid stream positions,
//! positives at a frame offset of up to round(delta_t * fps) within the same
//! session. Pairs never span session boundaries.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::img::RgbImage;
use crate::nn::Tensor;
use crate::stream::StreamManifest;

use super::SslError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetMode {
    /// Offset uniform over {1, ..., round(delta_t * fps)}, truncated at the
    /// session end.
    #[default]
    Uniform,
    /// Offset fixed at round(delta_t * fps); anchors that cannot reach it
    /// are excluded.
    Fixed,
}

/// Decoded crops for one session, in record order.
pub struct SessionCrops {
    pub images: Vec<RgbImage>,
}

/// All sessions' decoded crops plus the shared frame rate.
pub struct CropStore {
    pub sessions: Vec<SessionCrops>,
    pub fps: f64,
    pub crop_size_px: u32,
}

impl CropStore {
    /// Decode every crop referenced by the manifests. `dirs[i]` is the
    /// directory containing `manifests[i]`'s crop files.
    pub fn load(manifests: &[StreamManifest], dirs: &[&Path]) -> Result<Self, SslError> {
        assert_eq!(manifests.len(), dirs.len());
        if manifests.is_empty() {
            return Err(SslError::BadConfig("no manifests to train on".into()));
        }
        let fps = manifests[0].intr.fps;
        let crop = manifests[0].crop_size_px;
        let mut sessions = Vec::with_capacity(manifests.len());
        for (m, dir) in manifests.iter().zip(dirs) {
            let mut images = Vec::with_capacity(m.records.len());
            for r in &m.records {
                let img = RgbImage::load_png(&dir.join(&r.crop_file))?;
                if img.width != crop || img.height != crop {
                    return Err(SslError::BadConfig(format!(
                        "crop {} is {}x{}, expected {crop}",
                        r.crop_file, img.width, img.height
                    )));
                }
                images.push(img);
            }
            sessions.push(SessionCrops { images });
        }
        Ok(Self { sessions, fps, crop_size_px: crop })
    }

    /// Build a store from in-memory images (tests, oracle sets).
    pub fn from_images(sessions: Vec<Vec<RgbImage>>, fps: f64, crop_size_px: u32) -> Self {
        Self {
            sessions: sessions.into_iter().map(|images| SessionCrops { images }).collect(),
            fps,
            crop_size_px,
        }
    }

    pub fn total_records(&self) -> usize {
        self.sessions.iter().map(|s| s.images.len()).sum()
    }
}

/// (session index, anchor record index, offset in records).
pub type PairIndex = (usize, usize, usize);

/// Sample pair indices. Anchors are uniform over positions with at least one
/// following record in-session; offsets are uniform over the reachable range
/// (or pinned, in fixed mode).
pub fn sample_pair_indices(
    session_lens: &[usize],
    fps: f64,
    delta_t_s: f64,
    batch_size: usize,
    mode: OffsetMode,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<PairIndex>, SslError> {
    let max_off = ((delta_t_s * fps).round() as usize).max(1);
    // valid anchors: fixed mode needs the full lag ahead, uniform needs >= 1
    let mut anchors: Vec<(usize, usize)> = Vec::new();
    for (s, &len) in session_lens.iter().enumerate() {
        if len < 2 {
            continue;
        }
        let last = match mode {
            OffsetMode::Uniform => len - 1,
            OffsetMode::Fixed => {
                if len <= max_off {
                    continue;
                }
                len - max_off
            }
        };
        anchors.extend((0..last).map(|i| (s, i)));
    }
    if anchors.is_empty() {
        return Err(SslError::NoValidPairs);
    }
    let mut out = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let (s, i) = anchors[rng.gen_range(0..anchors.len())];
        let off = match mode {
            OffsetMode::Uniform => {
                let hi = max_off.min(session_lens[s] - 1 - i);
                rng.gen_range(1..=hi)
            }
            OffsetMode::Fixed => max_off,
        };
        out.push((s, i, off));
    }
    Ok(out)
}

/// Anchor/positive image batches with their per-pair frame offsets.
pub struct PairBatch {
    pub anchors: Tensor,
    pub positives: Tensor,
    pub offsets_frames: Vec<usize>,
}

/// Pack images (HWC, [0,1]) into an NCHW float tensor.
pub fn images_to_batch(images: &[&RgbImage]) -> Tensor {
    let b = images.len();
    let (h, w) = (images[0].height as usize, images[0].width as usize);
    let mut t = Tensor::zeros(&[b, 3, h, w]);
    for (bi, img) in images.iter().enumerate() {
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) * 3;
                for c in 0..3 {
                    t.data[((bi * 3 + c) * h + y) * w + x] = img.data[i + c];
                }
            }
        }
    }
    t
}

/// Draw one batch of temporal pairs from the store.
pub fn sample_pairs(
    store: &CropStore,
    delta_t_s: f64,
    batch_size: usize,
    mode: OffsetMode,
    photometric_jitter: f32,
    rng: &mut ChaCha12Rng,
) -> Result<PairBatch, SslError> {
    let lens: Vec<usize> = store.sessions.iter().map(|s| s.images.len()).collect();
    let idxs = sample_pair_indices(&lens, store.fps, delta_t_s, batch_size, mode, rng)?;
    let anchors_refs: Vec<&RgbImage> =
        idxs.iter().map(|&(s, i, _)| &store.sessions[s].images[i]).collect();
    let positives_refs: Vec<&RgbImage> =
        idxs.iter().map(|&(s, i, o)| &store.sessions[s].images[i + o]).collect();
    let mut anchors = images_to_batch(&anchors_refs);
    let mut positives = images_to_batch(&positives_refs);
    if photometric_jitter > 0.0 {
        let j = photometric_jitter.min(0.9);
        for t in [&mut anchors, &mut positives] {
            let b = t.shape[0];
            let per = t.data.len() / b;
            for bi in 0..b {
                let f: f32 = rng.gen_range(1.0 - j..1.0 + j);
                for v in &mut t.data[bi * per..(bi + 1) * per] {
                    *v = (*v * f).clamp(0.0, 1.0);
                }
            }
        }
    }
    Ok(PairBatch { anchors, positives, offsets_frames: idxs.iter().map(|&(_, _, o)| o).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn delta_one_frame_always_offset_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let idxs =
            sample_pair_indices(&[100], 30.0, 1.0 / 30.0, 500, OffsetMode::Uniform, &mut rng)
                .unwrap();
        assert!(idxs.iter().all(|&(_, _, o)| o == 1));
    }

    #[test]
    fn offsets_bounded_and_uniform() {
        // delta 1.5s at 30 fps -> offsets in 1..=45, roughly uniform
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let n = 100_000;
        let idxs =
            sample_pair_indices(&[10_000], 30.0, 1.5, n, OffsetMode::Uniform, &mut rng).unwrap();
        let mut counts = vec![0usize; 46];
        for &(_, i, o) in &idxs {
            assert!((1..=45).contains(&o));
            assert!(i + o < 10_000);
            if i + 45 < 10_000 {
                counts[o] += 1;
            }
        }
        // chi-square against uniform over 45 bins; critical value for
        // p = 0.01 at df = 44 is 68.71
        let total: usize = counts.iter().sum();
        let expect = total as f64 / 45.0;
        let chi2: f64 =
            counts[1..].iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        assert!(chi2 < 68.71, "offset distribution not uniform: chi2 = {chi2:.2}");
    }

    #[test]
    fn pairs_never_cross_sessions() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let lens = [10usize, 10];
        let idxs =
            sample_pair_indices(&lens, 30.0, 3.0, 5_000, OffsetMode::Uniform, &mut rng).unwrap();
        for &(s, i, o) in &idxs {
            assert!(i + o < lens[s], "pair escaped session {s}: anchor {i} offset {o}");
        }
    }

    #[test]
    fn fixed_mode_pins_the_lag() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let idxs =
            sample_pair_indices(&[100], 30.0, 0.5, 1_000, OffsetMode::Fixed, &mut rng).unwrap();
        assert!(idxs.iter().all(|&(_, i, o)| o == 15 && i + 15 < 100));
    }

    #[test]
    fn no_valid_pairs_is_an_error() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let r = sample_pair_indices(&[1, 1], 30.0, 1.0, 4, OffsetMode::Uniform, &mut rng);
        assert!(matches!(r, Err(SslError::NoValidPairs)));
    }

    #[test]
    fn batch_packing_is_chw() {
        let mut img = RgbImage::new(2, 2);
        img.set(1, 0, [0.1, 0.2, 0.3]);
        let t = images_to_batch(&[&img]);
        assert_eq!(t.shape, vec![1, 3, 2, 2]);
        // pixel (x=1, y=0) lands at [0, c, 0, 1]
        assert_eq!(t.data[1], 0.1);
        assert_eq!(t.data[4 + 1], 0.2);
        assert_eq!(t.data[8 + 1], 0.3);
    }
}
