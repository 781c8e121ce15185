//! Procedural 2-D toy glyphs with a one-parameter viewpoint family.
//!
//! Each shape family defines a signed-distance silhouette that morphs with a
//! cyclic view parameter `t` (silhouette morph plus a rotating shading
//! gradient), standing in for rotation in depth. Distances are returned in
//! pixels so a 1-px smoothstep gives antialiased coverage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::img::{LabelMask, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeFamily {
    Disc,
    Bar,
    Cross,
    Ring,
    Blob,
    Polygon(u8),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub object_id: u32,
    pub shape_family: ShapeFamily,
    pub base_color: [f32; 3],
    pub texture_seed: u64,
    pub size_px: f32,
}

fn hsv_to_rgb(h: f32, s: f32, v: f32) -> [f32; 3] {
    let h = h.rem_euclid(360.0) / 60.0;
    let i = h.floor() as i32 % 6;
    let f = h - h.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - f * s);
    let t = v * (1.0 - (1.0 - f) * s);
    match i {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

const SHAPE_CYCLE: [ShapeFamily; 8] = [
    ShapeFamily::Disc,
    ShapeFamily::Bar,
    ShapeFamily::Cross,
    ShapeFamily::Ring,
    ShapeFamily::Blob,
    ShapeFamily::Polygon(3),
    ShapeFamily::Polygon(5),
    ShapeFamily::Polygon(6),
];

/// A toy inventory of `k` objects, pairwise distinct in (shape, hue).
pub fn default_objects(k: usize, size_px: f32, seed: u64) -> Vec<ObjectSpec> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let hue_offset: f32 = rng.gen_range(0.0..360.0);
    (0..k)
        .map(|i| ObjectSpec {
            object_id: i as u32,
            shape_family: SHAPE_CYCLE[i % SHAPE_CYCLE.len()],
            base_color: hsv_to_rgb(hue_offset + i as f32 * 360.0 / k as f32, 0.85, 0.95),
            texture_seed: seed.wrapping_mul(0x9e37_79b9).wrapping_add(i as u64),
            size_px,
        })
        .collect()
}

fn rotate(u: (f32, f32), angle: f32) -> (f32, f32) {
    let (s, c) = angle.sin_cos();
    (u.0 * c - u.1 * s, u.0 * s + u.1 * c)
}

fn box_sd(u: (f32, f32), hx: f32, hy: f32) -> f32 {
    let dx = u.0.abs() - hx;
    let dy = u.1.abs() - hy;
    let ox = dx.max(0.0);
    let oy = dy.max(0.0);
    (ox * ox + oy * oy).sqrt() + dx.max(dy).min(0.0)
}

/// Signed distance of the silhouette at normalized coords `u` (unit radius 1)
/// for view parameter `t` in [0,1). Negative inside.
fn silhouette_sd(family: ShapeFamily, u: (f32, f32), t: f32, texture_seed: u64) -> f32 {
    let tau = std::f32::consts::TAU;
    match family {
        ShapeFamily::Disc => {
            let aspect = 0.45 + 0.55 * (tau * t).cos().abs();
            let r = rotate(u, std::f32::consts::PI * t);
            ((r.0 / 1.0).powi(2) + (r.1 / aspect).powi(2)).sqrt() - 1.0
        }
        ShapeFamily::Bar => {
            let r = rotate(u, std::f32::consts::PI * t);
            let hx = 0.55 + 0.45 * (tau * t).cos().abs();
            box_sd(r, hx, 0.30)
        }
        ShapeFamily::Cross => {
            let r = rotate(u, 0.5 * std::f32::consts::PI * t);
            let arm = 0.75 + 0.25 * (tau * t).cos();
            box_sd(r, arm, 0.26).min(box_sd(r, 0.26, arm))
        }
        ShapeFamily::Ring => {
            // circular band; the view morphs band width and shading only, so
            // points on the band circle stay inside at every view
            let d = (u.0 * u.0 + u.1 * u.1).sqrt();
            (d - 0.70).abs() - 0.26 * (0.85 + 0.15 * (tau * t).sin())
        }
        ShapeFamily::Blob => {
            let phase = (texture_seed % 628) as f32 / 100.0;
            let phi = u.1.atan2(u.0);
            let rad = (u.0 * u.0 + u.1 * u.1).sqrt();
            let r = 0.82
                + 0.20 * (3.0 * phi + tau * t + phase).sin()
                + 0.12 * (5.0 * phi - 2.0 * tau * t).cos();
            rad - r
        }
        ShapeFamily::Polygon(n) => {
            let n = n.max(3) as f32;
            let r = rotate(u, tau * t / n + 0.7 * t);
            let phi = r.1.atan2(r.0);
            let sector = std::f32::consts::PI / n;
            let local = phi.rem_euclid(2.0 * sector) - sector;
            let rad = (r.0 * r.0 + r.1 * r.1).sqrt();
            let edge = sector.cos() / local.cos();
            (rad - edge) * (0.96 + 0.04 * (tau * t).sin())
        }
    }
}

/// Maximum silhouette radius in units of the nominal radius; bounding boxes
/// are sized from this.
fn extent_factor(family: ShapeFamily) -> f32 {
    match family {
        ShapeFamily::Blob => 1.2,
        _ => 1.05,
    }
}

/// Radial band (as fractions of the nominal radius) guaranteed to stay inside
/// the silhouette at every view parameter; fixation targets are drawn here so
/// a tracked point never exits a morphing glyph.
pub fn anchor_radius_range(family: ShapeFamily) -> (f64, f64) {
    match family {
        ShapeFamily::Disc => (0.0, 0.32),
        ShapeFamily::Bar => (0.0, 0.20),
        ShapeFamily::Cross => (0.0, 0.18),
        ShapeFamily::Ring => (0.62, 0.78),
        ShapeFamily::Blob => (0.0, 0.40),
        ShapeFamily::Polygon(_) => (0.0, 0.38),
    }
}

/// Signed distance in pixels from point `p` (frame coords) to the silhouette
/// of `obj` rendered at `center` with view `t` and scale factor `scale`.
pub fn object_sd_px(obj: &ObjectSpec, center: (f64, f64), view: f32, scale: f32, p: (f32, f32)) -> f32 {
    let radius = obj.size_px * scale * 0.5;
    let u = ((p.0 - center.0 as f32) / radius, (p.1 - center.1 as f32) / radius);
    silhouette_sd(obj.shape_family, u, view.rem_euclid(1.0), obj.texture_seed) * radius
}

/// Whether `p` lies inside the rendered extent of the object.
pub fn point_in_object(obj: &ObjectSpec, center: (f64, f64), view: f32, scale: f32, p: (f32, f32)) -> bool {
    object_sd_px(obj, center, view, scale, p) <= 0.0
}

fn texture_params(seed: u64) -> (f32, f32, f32) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let angle: f32 = rng.gen_range(0.0..std::f32::consts::TAU);
    let freq: f32 = rng.gen_range(5.0..11.0);
    let phase: f32 = rng.gen_range(0.0..std::f32::consts::TAU);
    (angle, freq, phase)
}

/// Rasterize the object into `img` (and `mask`, as object_id + 1) at `center`
/// frame coordinates. Pixels are sampled at their centers; coverage >= 0.5
/// defines the labeled extent, matching [`point_in_object`].
pub fn draw_object(
    img: &mut RgbImage,
    mask: Option<&mut LabelMask>,
    obj: &ObjectSpec,
    center: (f64, f64),
    view: f32,
    scale: f32,
) {
    let radius = obj.size_px * scale * 0.5;
    let reach = radius * extent_factor(obj.shape_family) + 2.0;
    let x0 = ((center.0 - reach as f64).floor().max(0.0)) as u32;
    let y0 = ((center.1 - reach as f64).floor().max(0.0)) as u32;
    let x1 = ((center.0 + reach as f64).ceil().min(img.width as f64)) as u32;
    let y1 = ((center.1 + reach as f64).ceil().min(img.height as f64)) as u32;
    let t = view.rem_euclid(1.0);
    let (tex_angle, tex_freq, tex_phase) = texture_params(obj.texture_seed);
    let shade_dir = std::f32::consts::TAU * t;
    let (sd_sin, sd_cos) = shade_dir.sin_cos();
    let mut mask = mask;
    for y in y0..y1 {
        for x in x0..x1 {
            let p = (x as f32 + 0.5, y as f32 + 0.5);
            let sd = object_sd_px(obj, center, t, scale, p);
            let alpha = (0.5 - sd).clamp(0.0, 1.0);
            if alpha <= 0.0 {
                continue;
            }
            let u = ((p.0 - center.0 as f32) / radius, (p.1 - center.1 as f32) / radius);
            let shade = 0.78 + 0.22 * (u.0 * sd_cos + u.1 * sd_sin);
            let stripe = (tex_freq * (u.0 * tex_angle.cos() + u.1 * tex_angle.sin()) + tex_phase).sin();
            let tex = 1.0 + 0.12 * stripe;
            let rgb = [
                (obj.base_color[0] * shade * tex).clamp(0.08, 1.0),
                (obj.base_color[1] * shade * tex).clamp(0.08, 1.0),
                (obj.base_color[2] * shade * tex).clamp(0.08, 1.0),
            ];
            img.blend(x, y, rgb, alpha);
            if alpha >= 0.5 {
                if let Some(m) = mask.as_deref_mut() {
                    m.set(x, y, obj.object_id as u8 + 1);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_objects_are_pairwise_distinct() {
        let objs = default_objects(24, 12.0, 5);
        assert_eq!(objs.len(), 24);
        for i in 0..objs.len() {
            for j in i + 1..objs.len() {
                let same_shape = objs[i].shape_family == objs[j].shape_family;
                let same_color = objs[i].base_color == objs[j].base_color;
                assert!(!(same_shape && same_color), "objects {i} and {j} collide");
            }
        }
    }

    #[test]
    fn silhouettes_contain_center_and_exclude_far_field() {
        for family in SHAPE_CYCLE {
            for t in [0.0, 0.17, 0.5, 0.83] {
                // ring center is hollow; test a point on the ring band instead
                let probe = if family == ShapeFamily::Ring { (0.70, 0.0) } else { (0.0, 0.0) };
                assert!(
                    silhouette_sd(family, probe, t, 9) < 0.0,
                    "{family:?} at t={t} should contain {probe:?}"
                );
                assert!(
                    silhouette_sd(family, (3.0, 3.0), t, 9) > 0.0,
                    "{family:?} at t={t} should exclude far field"
                );
            }
        }
    }

    #[test]
    fn view_parameter_changes_silhouette() {
        // at least one probe point flips between views for each family
        for family in SHAPE_CYCLE {
            let mut changed = false;
            'outer: for &probe in &[(0.9f32, 0.0f32), (0.0, 0.9), (0.55, 0.55), (0.35, 0.0)] {
                let a = silhouette_sd(family, probe, 0.05, 9) <= 0.0;
                for t in [0.2, 0.35, 0.5, 0.65, 0.8] {
                    if (silhouette_sd(family, probe, t, 9) <= 0.0) != a {
                        changed = true;
                        break 'outer;
                    }
                }
            }
            assert!(changed, "{family:?} silhouette never changes with view");
        }
    }

    #[test]
    fn draw_marks_mask_consistently_with_point_test() {
        let obj = ObjectSpec {
            object_id: 3,
            shape_family: ShapeFamily::Cross,
            base_color: [0.9, 0.2, 0.1],
            texture_seed: 7,
            size_px: 12.0,
        };
        let mut img = RgbImage::new(32, 32);
        let mut mask = LabelMask::new(32, 32);
        draw_object(&mut img, Some(&mut mask), &obj, (16.0, 16.0), 0.3, 1.0, );
        let mut on = 0;
        for y in 0..32 {
            for x in 0..32 {
                let inside = point_in_object(&obj, (16.0, 16.0), 0.3, 1.0, (x as f32 + 0.5, y as f32 + 0.5));
                assert_eq!(mask.get(x, y) != 0, inside, "mismatch at ({x},{y})");
                if inside {
                    on += 1;
                }
            }
        }
        assert!(on > 20, "cross should cover a visible area, got {on}");
    }
}
