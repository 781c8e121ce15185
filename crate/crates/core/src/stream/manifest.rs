//! Stream manifest type and its line-delimited text serialization.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::geometry::CameraIntrinsics;

use super::strategy::StrategyKind;
use super::{q6, StreamError};

#[derive(Debug, Clone, PartialEq)]
pub struct StreamRecord {
    pub frame_idx: usize,
    /// Seconds, quantized to 6 decimals.
    pub time_s: f64,
    pub crop_file: String,
    pub gaze_x: f64,
    pub gaze_y: f64,
    pub target_object: Option<u32>,
    pub holding: bool,
}

impl StreamRecord {
    pub fn new(
        frame_idx: usize,
        fps: f64,
        crop_file: String,
        gaze_x: f64,
        gaze_y: f64,
        target_object: Option<u32>,
        holding: bool,
    ) -> Self {
        Self { frame_idx, time_s: q6(frame_idx as f64 / fps), crop_file, gaze_x, gaze_y, target_object, holding }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamManifest {
    pub session_id: String,
    pub intr: CameraIntrinsics,
    pub strategy: StrategyKind,
    pub crop_size_px: u32,
    pub records: Vec<StreamRecord>,
}

impl StreamManifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn write_manifest(path: &Path, m: &StreamManifest) -> Result<(), StreamError> {
    let mut out = String::new();
    out.push_str("# gaze-ssl stream manifest v1\n");
    let _ = writeln!(out, "# session_id={}", m.session_id);
    let _ = writeln!(out, "# width_px={}", m.intr.width_px);
    let _ = writeln!(out, "# height_px={}", m.intr.height_px);
    let _ = writeln!(out, "# hfov_deg={}", m.intr.hfov_deg);
    let _ = writeln!(out, "# fps={}", m.intr.fps);
    let _ = writeln!(out, "# strategy={}", m.strategy.name());
    let _ = writeln!(out, "# crop_size_px={}", m.crop_size_px);
    for r in &m.records {
        let target = match r.target_object {
            Some(t) => t.to_string(),
            None => "-".to_string(),
        };
        let _ = writeln!(
            out,
            "{} {:.6} {} {} {} {} {}",
            r.frame_idx,
            r.time_s,
            r.crop_file,
            r.gaze_x,
            r.gaze_y,
            target,
            u8::from(r.holding)
        );
    }
    fs::write(path, out).map_err(|e| StreamError::Io { path: path.display().to_string(), source: e })
}

pub fn read_manifest(path: &Path) -> Result<StreamManifest, StreamError> {
    let text = fs::read_to_string(path)
        .map_err(|e| StreamError::Io { path: path.display().to_string(), source: e })?;
    let p = path.display().to_string();
    let perr = |line: usize, msg: &str| StreamError::Parse { path: p.clone(), line, msg: msg.into() };

    let mut header = std::collections::BTreeMap::new();
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 7 {
            return Err(perr(ln, &format!("expected 7 fields, got {}", f.len())));
        }
        let frame_idx = f[0].parse().map_err(|_| perr(ln, "bad frame_idx"))?;
        let time_s = f[1].parse().map_err(|_| perr(ln, "bad time_s"))?;
        let gaze_x = f[3].parse().map_err(|_| perr(ln, "bad gaze_x"))?;
        let gaze_y = f[4].parse().map_err(|_| perr(ln, "bad gaze_y"))?;
        let target_object = match f[5] {
            "-" => None,
            s => Some(s.parse().map_err(|_| perr(ln, "bad target_object"))?),
        };
        let holding = match f[6] {
            "0" => false,
            "1" => true,
            _ => return Err(perr(ln, "bad holding flag")),
        };
        records.push(StreamRecord {
            frame_idx,
            time_s,
            crop_file: f[2].to_string(),
            gaze_x,
            gaze_y,
            target_object,
            holding,
        });
    }

    let get = |k: &str| header.get(k).cloned().ok_or_else(|| perr(0, &format!("missing header {k}")));
    let intr = CameraIntrinsics::new(
        get("width_px")?.parse().map_err(|_| perr(0, "bad width_px"))?,
        get("height_px")?.parse().map_err(|_| perr(0, "bad height_px"))?,
        get("hfov_deg")?.parse().map_err(|_| perr(0, "bad hfov_deg"))?,
        get("fps")?.parse().map_err(|_| perr(0, "bad fps"))?,
    )
    .map_err(|e| perr(0, &e.to_string()))?;
    let strategy = StrategyKind::from_name(&get("strategy")?)
        .ok_or_else(|| perr(0, "unknown strategy in header"))?;

    Ok(StreamManifest {
        session_id: get("session_id")?,
        intr,
        strategy,
        crop_size_px: get("crop_size_px")?.parse().map_err(|_| perr(0, "bad crop_size_px"))?,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_manifest() -> StreamManifest {
        let intr = CameraIntrinsics::new(64, 64, 72.0, 30.0).unwrap();
        let records = (0..5)
            .map(|i| {
                StreamRecord::new(
                    i * 2,
                    intr.fps,
                    format!("crops/{:06}.png", i),
                    10.25 + i as f64 * 0.37,
                    3.125,
                    if i % 2 == 0 { Some(i as u32) } else { None },
                    i % 3 == 0,
                )
            })
            .collect();
        StreamManifest {
            session_id: "sess-test".into(),
            intr,
            strategy: StrategyKind::HumanGaze,
            crop_size_px: 32,
            records,
        }
    }

    #[test]
    fn manifest_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample_manifest();
        let path = dir.path().join("manifest.txt");
        write_manifest(&path, &m).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(m, back);
        // and the second write is byte-identical
        let path2 = dir.path().join("manifest2.txt");
        write_manifest(&path2, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn times_follow_frame_index() {
        let m = sample_manifest();
        for r in &m.records {
            assert!((r.time_s - r.frame_idx as f64 / 30.0).abs() < 5e-7);
        }
    }
}
