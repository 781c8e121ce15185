//! Small RGB image buffer used by the simulator and stream builder.
//!
//! Pixels are f32 in [0, 1], row-major, interleaved RGB. PNG round-trips go
//! through 8-bit quantization, which is the on-disk precision of crop files.

use std::path::Path;

use thiserror::Error;

use crate::geometry::CropWindow;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("io error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("png error for {path}: {msg}")]
    Png { path: String, msg: String },
    #[error("crop window ({x0},{y0},{size}) exceeds {w}x{h} image")]
    CropOutOfBounds { x0: u32, y0: u32, size: u32, w: u32, h: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    /// Interleaved RGB, length = width * height * 3.
    pub data: Vec<f32>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, data: vec![0.0; (width * height * 3) as usize] }
    }

    #[inline]
    pub fn idx(&self, x: u32, y: u32) -> usize {
        ((y * self.width + x) * 3) as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [f32; 3] {
        let i = self.idx(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [f32; 3]) {
        let i = self.idx(x, y);
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }

    /// Alpha-blend `rgb` over the current pixel.
    #[inline]
    pub fn blend(&mut self, x: u32, y: u32, rgb: [f32; 3], alpha: f32) {
        let i = self.idx(x, y);
        for c in 0..3 {
            self.data[i + c] = self.data[i + c] * (1.0 - alpha) + rgb[c] * alpha;
        }
    }

    pub fn crop(&self, w: &CropWindow) -> Result<RgbImage, ImageError> {
        if w.x0 + w.size_px > self.width || w.y0 + w.size_px > self.height {
            return Err(ImageError::CropOutOfBounds {
                x0: w.x0,
                y0: w.y0,
                size: w.size_px,
                w: self.width,
                h: self.height,
            });
        }
        let mut out = RgbImage::new(w.size_px, w.size_px);
        for y in 0..w.size_px {
            let src = self.idx(w.x0, w.y0 + y);
            let dst = out.idx(0, y);
            let n = (w.size_px * 3) as usize;
            out.data[dst..dst + n].copy_from_slice(&self.data[src..src + n]);
        }
        Ok(out)
    }

    /// Bilinear resize to a square of side `size`.
    pub fn resize_bilinear(&self, size: u32) -> RgbImage {
        let mut out = RgbImage::new(size, size);
        if size == 0 {
            return out;
        }
        let sx = self.width as f32 / size as f32;
        let sy = self.height as f32 / size as f32;
        for oy in 0..size {
            let fy = ((oy as f32 + 0.5) * sy - 0.5).clamp(0.0, self.height as f32 - 1.0);
            let y0 = fy.floor() as u32;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = fy - y0 as f32;
            for ox in 0..size {
                let fx = ((ox as f32 + 0.5) * sx - 0.5).clamp(0.0, self.width as f32 - 1.0);
                let x0 = fx.floor() as u32;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = fx - x0 as f32;
                let p00 = self.get(x0, y0);
                let p10 = self.get(x1, y0);
                let p01 = self.get(x0, y1);
                let p11 = self.get(x1, y1);
                let mut rgb = [0.0f32; 3];
                for c in 0..3 {
                    let top = p00[c] * (1.0 - wx) + p10[c] * wx;
                    let bot = p01[c] * (1.0 - wx) + p11[c] * wx;
                    rgb[c] = top * (1.0 - wy) + bot * wy;
                }
                out.set(ox, oy, rgb);
            }
        }
        out
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect()
    }

    pub fn from_u8(width: u32, height: u32, bytes: &[u8]) -> Self {
        Self {
            width,
            height,
            data: bytes.iter().map(|&b| b as f32 / 255.0).collect(),
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        let buf = self.to_u8();
        image::save_buffer(
            path,
            &buf,
            self.width,
            self.height,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| ImageError::Png { path: path.display().to_string(), msg: e.to_string() })
    }

    pub fn load_png(path: &Path) -> Result<Self, ImageError> {
        let img = image::open(path)
            .map_err(|e| ImageError::Png { path: path.display().to_string(), msg: e.to_string() })?
            .into_rgb8();
        let (w, h) = (img.width(), img.height());
        Ok(Self::from_u8(w, h, img.as_raw()))
    }
}

/// Per-pixel object-id mask: 0 = background, k+1 = object k.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMask {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl LabelMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, data: vec![0; (width * height) as usize] }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.data[(y * self.width + x) as usize] = v;
    }

    /// Object id at a continuous frame position, if any.
    pub fn object_at(&self, x: f64, y: f64) -> Option<u32> {
        if x < 0.0 || y < 0.0 {
            return None;
        }
        let (xi, yi) = (x.floor() as u32, y.floor() as u32);
        if xi >= self.width || yi >= self.height {
            return None;
        }
        match self.get(xi, yi) {
            0 => None,
            v => Some(v as u32 - 1),
        }
    }

    pub fn coverage(&self) -> f64 {
        let on = self.data.iter().filter(|&&v| v != 0).count();
        on as f64 / self.data.len() as f64
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        image::save_buffer(path, &self.data, self.width, self.height, image::ExtendedColorType::L8)
            .map_err(|e| ImageError::Png { path: path.display().to_string(), msg: e.to_string() })
    }

    pub fn load_png(path: &Path) -> Result<Self, ImageError> {
        let img = image::open(path)
            .map_err(|e| ImageError::Png { path: path.display().to_string(), msg: e.to_string() })?
            .into_luma8();
        let (w, h) = (img.width(), img.height());
        Ok(Self { width: w, height: h, data: img.into_raw() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crop_copies_expected_region() {
        let mut img = RgbImage::new(8, 8);
        img.set(3, 2, [0.5, 0.25, 1.0]);
        let w = CropWindow { x0: 2, y0: 1, size_px: 4 };
        let c = img.crop(&w).unwrap();
        assert_eq!(c.width, 4);
        assert_eq!(c.get(1, 1), [0.5, 0.25, 1.0]);
    }

    #[test]
    fn crop_out_of_bounds_is_error() {
        let img = RgbImage::new(8, 8);
        assert!(img.crop(&CropWindow { x0: 6, y0: 0, size_px: 4 }).is_err());
    }

    #[test]
    fn resize_preserves_constant_images() {
        let mut img = RgbImage::new(9, 9);
        for y in 0..9 {
            for x in 0..9 {
                img.set(x, y, [0.3, 0.6, 0.9]);
            }
        }
        let r = img.resize_bilinear(4);
        for y in 0..4 {
            for x in 0..4 {
                let p = r.get(x, y);
                assert!((p[0] - 0.3).abs() < 1e-6);
                assert!((p[2] - 0.9).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn png_round_trip_is_lossless_at_u8() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = RgbImage::new(5, 3);
        for (i, v) in img.data.iter_mut().enumerate() {
            *v = (i % 256) as f32 / 255.0;
        }
        let path = dir.path().join("t.png");
        img.save_png(&path).unwrap();
        let back = RgbImage::load_png(&path).unwrap();
        assert_eq!(img.to_u8(), back.to_u8());
    }

    #[test]
    fn mask_object_lookup() {
        let mut m = LabelMask::new(4, 4);
        m.set(2, 1, 3);
        assert_eq!(m.object_at(2.7, 1.2), Some(2));
        assert_eq!(m.object_at(0.0, 0.0), None);
        assert_eq!(m.object_at(-1.0, 1.0), None);
        assert_eq!(m.object_at(4.0, 1.0), None);
    }
}
