//! Oracle view sets: each object rendered in isolation from a grid of view
//! angles and distances, on blank or cluttered background.
//!
//! Views are rendered inside a 30-degree-equivalent window (the object-
//! fixation crop geometry) and emitted in angle-major order per object, so
//! consecutive views of one object form a smooth "temporal" sweep.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::geometry::{deg_to_px, CameraIntrinsics};
use crate::img::RgbImage;

use super::glyph::{draw_object, ObjectSpec};
use super::Background;

/// Field of view of the oracle crop window, degrees.
pub const ORACLE_WINDOW_DEG: f64 = 30.0;

const VIEW_SCALES: [f32; 3] = [0.9, 1.05, 1.2];

#[derive(Debug, Clone)]
pub struct OracleView {
    pub object_id: u32,
    pub image: RgbImage,
    pub view_angle: f32,
    pub view_scale: f32,
}

/// Render `n_views` views of every object, labeled by object id. The same
/// seeds always produce the same image set. `angle_phase` offsets the view
/// grid so different consumers (training vs probing) can sample disjoint
/// poses. Images come out at `out_size_px`.
#[allow(clippy::too_many_arguments)]
pub fn generate_oracle_views(
    objects: &[ObjectSpec],
    n_views: usize,
    background: Background,
    intr: &CameraIntrinsics,
    out_size_px: u32,
    angle_phase: f32,
    seed: u64,
) -> Vec<OracleView> {
    assert!(n_views >= 1, "n_views must be at least 1");
    let window = deg_to_px(ORACLE_WINDOW_DEG.min(intr.hfov_deg * 0.9), intr)
        .unwrap_or(out_size_px as f64)
        .round()
        .max(8.0) as u32;
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x06ac_1e00u64);
    let mut out = Vec::with_capacity(objects.len() * n_views);
    for obj in objects {
        for v in 0..n_views {
            let angle = (v as f32 / n_views as f32 + angle_phase).rem_euclid(1.0);
            let scale = VIEW_SCALES[v % VIEW_SCALES.len()];
            let mut img = RgbImage::new(window, window);
            if background == Background::Clutter {
                clutter_fill(&mut img, &mut rng);
            }
            let jitter = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let center = (window as f64 / 2.0 + jitter.0, window as f64 / 2.0 + jitter.1);
            draw_object(&mut img, None, obj, center, angle, scale);
            let image =
                if window == out_size_px { img } else { img.resize_bilinear(out_size_px) };
            out.push(OracleView { object_id: obj.object_id, image, view_angle: angle, view_scale: scale });
        }
    }
    out
}

fn clutter_fill(img: &mut RgbImage, rng: &mut ChaCha12Rng) {
    let waves: Vec<(f32, f32, f32, f32)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(0.05f32..0.5),
                rng.gen_range(0.05f32..0.5),
                rng.gen_range(0.0f32..std::f32::consts::TAU),
                rng.gen_range(0.02f32..0.05),
            )
        })
        .collect();
    for y in 0..img.height {
        for x in 0..img.width {
            let mut v = 0.18f32;
            for &(kx, ky, ph, amp) in &waves {
                v += amp * (kx * x as f32 + ky * y as f32 + ph).sin();
            }
            img.set(x, y, [v, v * 0.96, v * 0.9]);
        }
    }
}
