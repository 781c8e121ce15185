//! Session persistence: frames, label masks, and the gaze log, written in an
//! inspectable directory layout so externally recorded sessions can be
//! ingested through the same path.
//!
//! Layout: `<root>/sessions/<session_id>/` containing `session.txt`
//! (`#` header lines, then `frame_idx time_s gaze_x gaze_y target holding`
//! per frame), `frames/NNNNNN.png`, and `masks/NNNNNN.png`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::geometry::GazePoint;
use crate::img::{LabelMask, RgbImage};
use crate::sim::{simulate_session_trace, FrameRecord, SessionConfig, SimOptions};

use super::ExpError;

pub struct StoredSession {
    pub frames: Vec<FrameRecord>,
    pub masks: Vec<LabelMask>,
}

pub fn session_dir(root: &Path, session_id: &str) -> PathBuf {
    root.join("sessions").join(session_id)
}

pub fn session_exists(root: &Path, session_id: &str) -> bool {
    session_dir(root, session_id).join("session.txt").is_file()
}

/// Simulate and persist one session. Refuses to overwrite unless `force`.
pub fn write_session(
    root: &Path,
    session_id: &str,
    cfg: &SessionConfig,
    force: bool,
) -> Result<(), ExpError> {
    let dir = session_dir(root, session_id);
    if dir.join("session.txt").exists() && !force {
        return Err(ExpError::AlreadyExists(dir.display().to_string()));
    }
    let trace = simulate_session_trace(cfg, SimOptions { images: true, masks: true })?;
    let masks = trace.masks.as_ref().expect("masks requested");

    let frames_dir = dir.join("frames");
    let masks_dir = dir.join("masks");
    for d in [&frames_dir, &masks_dir] {
        fs::create_dir_all(d).map_err(|e| ExpError::Io { path: d.display().to_string(), source: e })?;
    }
    let mut log = String::new();
    let _ = writeln!(log, "# gaze-ssl session v1");
    let _ = writeln!(log, "# session_id={session_id}");
    let _ = writeln!(log, "# width_px={}", cfg.intr.width_px);
    let _ = writeln!(log, "# height_px={}", cfg.intr.height_px);
    let _ = writeln!(log, "# hfov_deg={}", cfg.intr.hfov_deg);
    let _ = writeln!(log, "# fps={}", cfg.intr.fps);
    let _ = writeln!(log, "# policy={}", cfg.policy.kind.name());
    let _ = writeln!(log, "# n_objects={}", cfg.n_objects);
    let _ = writeln!(log, "# object_seed={}", cfg.object_seed);
    let _ = writeln!(log, "# render_seed={}", cfg.render_seed);
    for (f, m) in trace.frames.iter().zip(masks) {
        let name = format!("{:06}.png", f.frame_idx);
        f.image.save_png(&frames_dir.join(&name))?;
        m.save_png(&masks_dir.join(&name))?;
        let target = f.target_object.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            log,
            "{} {:.6} {} {} {} {}",
            f.frame_idx,
            f.frame_idx as f64 / cfg.intr.fps,
            f.gaze.x,
            f.gaze.y,
            target,
            u8::from(f.holding)
        );
    }
    let log_path = dir.join("session.txt");
    fs::write(&log_path, log)
        .map_err(|e| ExpError::Io { path: log_path.display().to_string(), source: e })?;
    Ok(())
}

/// Load a stored session (frames, masks, gaze log).
pub fn load_session(root: &Path, session_id: &str) -> Result<StoredSession, ExpError> {
    let dir = session_dir(root, session_id);
    let log_path = dir.join("session.txt");
    let text = fs::read_to_string(&log_path)
        .map_err(|e| ExpError::Io { path: log_path.display().to_string(), source: e })?;
    let mut frames = Vec::new();
    let mut masks = Vec::new();
    for line in text.lines() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(ExpError::Config(format!("bad session line in {}", log_path.display())));
        }
        let frame_idx: usize =
            f[0].parse().map_err(|_| ExpError::Config("bad frame index".into()))?;
        let name = format!("{frame_idx:06}.png");
        let image = RgbImage::load_png(&dir.join("frames").join(&name))?;
        let mask = LabelMask::load_png(&dir.join("masks").join(&name))?;
        let gaze = GazePoint::new(
            f[2].parse().map_err(|_| ExpError::Config("bad gaze x".into()))?,
            f[3].parse().map_err(|_| ExpError::Config("bad gaze y".into()))?,
        );
        let target_object = match f[4] {
            "-" => None,
            s => Some(s.parse().map_err(|_| ExpError::Config("bad target".into()))?),
        };
        let holding = f[5] == "1";
        frames.push(FrameRecord { frame_idx, image, gaze, target_object, holding });
        masks.push(mask);
    }
    Ok(StoredSession { frames, masks })
}

/// Obtain a session for stream building: loads it when stored, otherwise
/// simulates it in memory.
pub fn obtain_session(root: &Path, session_id: &str, cfg: &SessionConfig) -> Result<StoredSession, ExpError> {
    if session_exists(root, session_id) {
        return load_session(root, session_id);
    }
    let trace = simulate_session_trace(cfg, SimOptions { images: true, masks: true })?;
    Ok(StoredSession { frames: trace.frames, masks: trace.masks.expect("masks requested") })
}
