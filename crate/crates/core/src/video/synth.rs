//! Deterministic analytic test clips.
//!
//! Every clip samples the same continuous texture (oriented gratings, a
//! blob/edge pattern and a fine-scale grating, roughly spanning 18..238) at
//! pixel centers, so motion is exact and clips are bit-identical across runs.

use std::f64::consts::PI;
use std::str::FromStr;

use super::{Frame, SourceFormat, Video};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClipKind {
    /// The texture does not move.
    Static,
    /// One pixel per frame to the right.
    Translate,
    /// Rotation about the frame center, 1.5 degrees per frame.
    Rotate,
}

impl FromStr for ClipKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(ClipKind::Static),
            "translate" => Ok(ClipKind::Translate),
            "rotate" => Ok(ClipKind::Rotate),
            other => Err(Error::Config(format!("unknown clip kind `{other}`"))),
        }
    }
}

/// Degrees per frame for [`ClipKind::Rotate`].
pub const ROTATION_STEP_DEG: f64 = 1.5;

pub fn texture(x: f64, y: f64) -> f64 {
    let g1 = (2.0 * PI * (0.8 * x + 0.6 * y) / 17.0).sin();
    let g2 = (2.0 * PI * (-0.3 * x + 0.95 * y) / 9.0 + 1.3).sin();
    let blobs = (4.0 * (2.0 * PI * x / 31.0).sin() * (2.0 * PI * y / 23.0 + 0.7).sin()).tanh();
    let fine = (2.0 * PI * (x * 1.1f64.cos() + y * 1.1f64.sin()) / 5.3).sin();
    128.0 + 35.0 * g1 + 20.0 * g2 + 45.0 * blobs + 10.0 * fine
}

pub fn clip_frame(kind: ClipKind, height: usize, width: usize, t: usize) -> Frame {
    let t = t as f64;
    match kind {
        ClipKind::Static => Frame::from_fn(height, width, |r, c| texture(c as f64, r as f64)),
        ClipKind::Translate => {
            Frame::from_fn(height, width, |r, c| texture(c as f64 - t, r as f64))
        }
        ClipKind::Rotate => {
            let (cy, cx) = ((height as f64 - 1.0) / 2.0, (width as f64 - 1.0) / 2.0);
            let (s, co) = (-t * ROTATION_STEP_DEG.to_radians()).sin_cos();
            Frame::from_fn(height, width, |r, c| {
                let (dx, dy) = (c as f64 - cx, r as f64 - cy);
                texture(cx + co * dx - s * dy, cy + s * dx + co * dy)
            })
        }
    }
}

pub fn generate(kind: ClipKind, height: usize, width: usize, frames: usize) -> Result<Video> {
    if height == 0 || width == 0 || frames == 0 {
        return Err(Error::Config(format!(
            "cannot synthesize a {height}x{width}x{frames} clip"
        )));
    }
    let frames = (0..frames).map(|t| clip_frame(kind, height, width, t)).collect();
    Video::new(frames, SourceFormat::Synthetic)
}
