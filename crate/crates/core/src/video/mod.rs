//! Grayscale video containers, noise synthesis, quality metrics and
//! deterministic synthetic test clips.

mod io;
mod metrics;
mod noise;
pub mod synth;

pub use io::{read_video, write_video, Container};
pub use metrics::{format_db, psnr, psnr_from_mse, write_psnr_csv, PsnrReport, PEAK};
pub use noise::add_gaussian_noise;

use crate::error::{Error, Result};

/// A single luminance frame, row-major, pixel scale 0..255.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Shape(format!("empty {height}x{width} frame")));
        }
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "{} samples for a {height}x{width} frame",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("frame contains non-finite samples".into()));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// Where a video came from; carried through so writers can mirror it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Y4m,
    PgmSequence,
    RawGray,
    Synthetic,
}

/// An ordered sequence of equally sized frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    frames: Vec<Frame>,
    pub source: SourceFormat,
    /// Frame rate as numerator/denominator, kept for y4m output.
    pub frame_rate: (u32, u32),
}

impl Video {
    pub fn new(frames: Vec<Frame>, source: SourceFormat) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Shape("video has no frames".into()))?;
        if let Some(bad) = frames.iter().position(|f| !f.same_shape(first)) {
            return Err(Error::Shape(format!(
                "frame {bad} is {}x{}, expected {}x{}",
                frames[bad].height(),
                frames[bad].width(),
                first.height(),
                first.width()
            )));
        }
        Ok(Self {
            frames,
            source,
            frame_rate: (30, 1),
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Same metadata, new frames.
    pub fn with_frames(&self, frames: Vec<Frame>) -> Result<Self> {
        let mut v = Video::new(frames, self.source)?;
        v.frame_rate = self.frame_rate;
        Ok(v)
    }

    pub fn same_shape(&self, other: &Video) -> bool {
        self.frame_count() == other.frame_count() && self.frames[0].same_shape(&other.frames[0])
    }
}

/// 8-bit quantization used on every write: round half away from zero, then
/// clamp to `0..=255`.
pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    v.round().clamp(0.0, 255.0) as u8
}
