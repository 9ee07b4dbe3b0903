//! PSNR against a clean reference, per video and per frame.

use std::io::Write;

use super::Video;
use crate::error::{Error, Result};

/// Peak sample value for 8-bit content.
pub const PEAK: f64 = 255.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PsnrReport {
    /// PSNR of the RMSE over every pixel of the video.
    pub video_db: f64,
    pub frames_db: Vec<f64>,
}

impl PsnrReport {
    /// Mean of the per-frame values (infinite frames included as-is).
    pub fn mean_frame_db(&self) -> f64 {
        self.frames_db.iter().sum::<f64>() / self.frames_db.len() as f64
    }
}

/// `10 log10(255^2 / mse)`, i.e. `20 log10(255 / rmse)`; `+inf` when `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn psnr(reference: &Video, test: &Video) -> Result<PsnrReport> {
    if !reference.same_shape(test) {
        return Err(Error::Shape(format!(
            "reference is {}x{}x{}, test is {}x{}x{}",
            reference.height(),
            reference.width(),
            reference.frame_count(),
            test.height(),
            test.width(),
            test.frame_count()
        )));
    }
    let mut total = 0.0;
    let mut frames_db = Vec::with_capacity(reference.frame_count());
    for (r, t) in reference.frames().iter().zip(test.frames()) {
        let sse: f64 = r
            .data()
            .iter()
            .zip(t.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        total += sse;
        frames_db.push(psnr_from_mse(sse / r.data().len() as f64));
    }
    let pixels = (reference.frame_count() * reference.width() * reference.height()) as f64;
    Ok(PsnrReport {
        video_db: psnr_from_mse(total / pixels),
        frames_db,
    })
}

/// Four decimals, or `inf`.
pub fn format_db(db: f64) -> String {
    if db.is_infinite() {
        "inf".to_string()
    } else {
        format!("{db:.4}")
    }
}

/// CSV with header `frame,psnr_db`, one row per frame (numbered from 0), and a
/// final `all,<video psnr>` row.
pub fn write_psnr_csv(report: &PsnrReport, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "frame,psnr_db")?;
    for (i, db) in report.frames_db.iter().enumerate() {
        writeln!(out, "{i},{}", format_db(*db))?;
    }
    writeln!(out, "all,{}", format_db(report.video_db))
}
