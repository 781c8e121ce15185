//! Desk-scale toolkit for studying how gaze behavior shapes time-based
//! self-supervised visual learning: an egocentric play-session simulator,
//! gaze-contingent crop streams, a small autodiff network stack with
//! SimCLR-TT / BYOL-TT objectives, and a frozen-encoder evaluation suite
//! with behavioral statistics.

pub mod eval;
pub mod events;
pub mod geometry;
pub mod img;
pub mod nn;
pub mod sim;
pub mod ssl;
pub mod stream;

