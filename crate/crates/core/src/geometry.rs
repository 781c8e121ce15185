//! Visual-angle geometry: degree/pixel conversion and gaze-centered crop windows.
//!
//! The angle model is linear (a fixed pixel pitch of `hfov_deg / width_px`
//! degrees per pixel, isotropic in x and y). Crop windows are integer squares
//! clamped to the frame so that the original gaze point always stays inside
//! the returned window.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("visual angle must be positive, got {0}")]
    NonPositiveAngle(f64),
    #[error("crop size {size}px does not fit a {width}x{height} frame")]
    CropTooLarge { size: u32, width: u32, height: u32 },
    #[error("invalid camera intrinsics: {0}")]
    BadIntrinsics(String),
}

/// Head-camera intrinsics. The vertical pixel pitch is assumed equal to the
/// horizontal one, so `hfov_deg` fully determines the angle model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width_px: u32,
    pub height_px: u32,
    pub hfov_deg: f64,
    pub fps: f64,
}

impl CameraIntrinsics {
    pub fn new(width_px: u32, height_px: u32, hfov_deg: f64, fps: f64) -> Result<Self, GeometryError> {
        if width_px < 1 || height_px < 1 {
            return Err(GeometryError::BadIntrinsics(format!(
                "frame must be at least 1x1, got {width_px}x{height_px}"
            )));
        }
        if !(hfov_deg > 0.0 && hfov_deg < 180.0) {
            return Err(GeometryError::BadIntrinsics(format!(
                "hfov must be in (0, 180) degrees, got {hfov_deg}"
            )));
        }
        if fps <= 0.0 || fps.is_nan() {
            return Err(GeometryError::BadIntrinsics(format!("fps must be positive, got {fps}")));
        }
        Ok(Self { width_px, height_px, hfov_deg, fps })
    }

    /// Degrees of visual angle spanned by one pixel.
    pub fn deg_per_px(&self) -> f64 {
        self.hfov_deg / self.width_px as f64
    }
}

/// A gaze location in continuous frame coordinates (pixels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazePoint {
    pub x: f64,
    pub y: f64,
}

impl GazePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn in_frame(&self, intr: &CameraIntrinsics) -> bool {
        self.x >= 0.0 && self.x < intr.width_px as f64 && self.y >= 0.0 && self.y < intr.height_px as f64
    }
}

/// An axis-aligned square pixel window, fully inside its frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropWindow {
    pub x0: u32,
    pub y0: u32,
    pub size_px: u32,
}

impl CropWindow {
    pub fn contains(&self, p: &GazePoint) -> bool {
        p.x >= self.x0 as f64
            && p.x < (self.x0 + self.size_px) as f64
            && p.y >= self.y0 as f64
            && p.y < (self.y0 + self.size_px) as f64
    }
}

/// Convert a visual angle to pixels with the linear pitch model.
pub fn deg_to_px(deg: f64, intr: &CameraIntrinsics) -> Result<f64, GeometryError> {
    if deg <= 0.0 || deg.is_nan() {
        return Err(GeometryError::NonPositiveAngle(deg));
    }
    Ok(deg * intr.width_px as f64 / intr.hfov_deg)
}

/// Convert a pixel distance to degrees of visual angle.
pub fn px_to_deg(px: f64, intr: &CameraIntrinsics) -> f64 {
    px * intr.hfov_deg / intr.width_px as f64
}

/// Compute the `size_px` square centered on the gaze point, shifting it
/// orthogonally away from any frame border by the minimum number of pixels.
/// The original gaze point always lies inside the returned window.
pub fn compute_crop(
    gaze: &GazePoint,
    size_px: u32,
    intr: &CameraIntrinsics,
) -> Result<CropWindow, GeometryError> {
    if size_px > intr.width_px.min(intr.height_px) || size_px == 0 {
        return Err(GeometryError::CropTooLarge {
            size: size_px,
            width: intr.width_px,
            height: intr.height_px,
        });
    }
    let half = size_px as f64 / 2.0;
    let clamp_axis = |g: f64, extent: u32| -> u32 {
        let mut lo = (g - half).floor();
        // For tiny windows the floored center can land just left of the gaze
        // pixel; keep the gaze inside before clamping to the frame.
        if g >= lo + size_px as f64 {
            lo = g.floor() - size_px as f64 + 1.0;
        }
        let max0 = (extent - size_px) as f64;
        lo.clamp(0.0, max0) as u32
    };
    Ok(CropWindow {
        x0: clamp_axis(gaze.x, intr.width_px),
        y0: clamp_axis(gaze.y, intr.height_px),
        size_px,
    })
}

/// Euclidean pixel distance between two gaze points converted to degrees.
/// Both points are assumed to lie inside the frame.
pub fn angular_distance(a: &GazePoint, b: &GazePoint, intr: &CameraIntrinsics) -> f64 {
    let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
    px_to_deg(d, intr)
}
