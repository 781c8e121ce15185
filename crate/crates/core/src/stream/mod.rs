//! Turning sessions into the training datasets: gaze-contingent crop streams
//! with an inspectable on-disk manifest format, train/test splitting, and
//! class-rebalancing resamplers.
//!
//! Dataset layout: `<root>/<session_id>/<strategy>/manifest.txt` plus
//! `crops/NNNNNN.png`. Manifest header lines start with `#` and carry the
//! session metadata; each record line is space-separated:
//! `frame_idx time_s crop_file gaze_x gaze_y target_object holding`
//! with times in seconds at 6 decimals, `-` for an absent target, and
//! holding as 0/1.

mod manifest;
mod resample;
mod split;
mod strategy;

use thiserror::Error;

pub use manifest::{read_manifest, write_manifest, StreamManifest, StreamRecord};
pub use resample::{resample_indices, ResampleMode};
pub use split::{split_frames, split_sessions, SplitSpec, SplitUnit, GUARD_GAP_S};
pub use strategy::{
    build_stream, strategy_by_name, strategy_names, StrategyKind, StreamBuildContext,
    StreamStrategy,
};

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("session is empty")]
    EmptySession,
    #[error("no labeled frames for the objects-fixation stream")]
    NoLabeledFrames,
    #[error("manifest needs at least 2 records, got {0}")]
    DegenerateManifest(usize),
    #[error("train fraction must be in (0,1), got {0}")]
    BadFraction(f64),
    #[error("top_k {top_k} must be smaller than the number of classes {classes}")]
    BadTopK { top_k: usize, classes: usize },
    #[error("unknown strategy {0}")]
    UnknownStrategy(String),
    #[error("manifest parse error at {path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Image(#[from] crate::img::ImageError),
    #[error("io error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Quantize to 6 decimals (the on-disk precision of times).
pub(crate) fn q6(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("fixed-point format always parses")
}
