//! 3D patch geometry: vectorization, scan order, extraction, deposit and
//! weight-normalized aggregation.
//!
//! A patch covers `n1` rows, `n2` columns and all `m` frames of a buffer.
//! Vectorized patches use a fixed element order: column index fastest, then
//! row, then temporal depth, i.e. element `(r, c, d)` lives at
//! `d * n1 * n2 + r * n2 + c`. The initial 3D DCT is built in the same order.

use crate::error::{Error, Result};
use crate::video::Frame;

/// Patch size, frame size and spatial stride.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGeometry {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub frame_h: usize,
    pub frame_w: usize,
    pub stride: usize,
}

impl PatchGeometry {
    pub fn new(n1: usize, n2: usize, m: usize, frame_h: usize, frame_w: usize) -> Result<Self> {
        Self::with_stride(n1, n2, m, frame_h, frame_w, 1)
    }

    pub fn with_stride(
        n1: usize,
        n2: usize,
        m: usize,
        frame_h: usize,
        frame_w: usize,
        stride: usize,
    ) -> Result<Self> {
        if n1 == 0 || n2 == 0 || m == 0 || stride == 0 {
            return Err(Error::Config("patch sides, depth and stride must be >= 1".into()));
        }
        if stride > n1.min(n2) {
            return Err(Error::Config(format!(
                "stride {stride} would leave gaps between {n1}x{n2} patches"
            )));
        }
        if n1 > frame_h || n2 > frame_w {
            return Err(Error::Config(format!(
                "{n1}x{n2} patches do not fit in {frame_h}x{frame_w} frames"
            )));
        }
        Ok(Self {
            n1,
            n2,
            m,
            frame_h,
            frame_w,
            stride,
        })
    }

    /// Vectorized patch length `n1 * n2 * m`.
    pub fn n(&self) -> usize {
        self.n1 * self.n2 * self.m
    }

    pub fn slice_len(&self) -> usize {
        self.n1 * self.n2
    }

    fn offsets(len: usize, patch: usize, stride: usize) -> Vec<usize> {
        let last = len - patch;
        let mut v: Vec<usize> = (0..=last).step_by(stride).collect();
        // Always reach the far border so every pixel is covered.
        if *v.last().unwrap() != last {
            v.push(last);
        }
        v
    }

    pub fn row_offsets(&self) -> Vec<usize> {
        Self::offsets(self.frame_h, self.n1, self.stride)
    }

    pub fn col_offsets(&self) -> Vec<usize> {
        Self::offsets(self.frame_w, self.n2, self.stride)
    }

    /// Number of patch positions; `(frame_h - n1 + 1) * (frame_w - n2 + 1)`
    /// at stride 1.
    pub fn patch_count(&self) -> usize {
        self.row_offsets().len() * self.col_offsets().len()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row + self.n1 <= self.frame_h && col + self.n2 <= self.frame_w
    }

    fn check_pos(&self, row: usize, col: usize) -> Result<()> {
        if self.contains(row, col) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                row,
                col,
                frame_h: self.frame_h,
                frame_w: self.frame_w,
            })
        }
    }
}

/// Scan direction of a buffer; consecutive buffers alternate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(index: u64) -> Self {
        if index % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Boustrophedon scan of all patch positions: left to right on even patch
/// rows, right to left on odd ones. With [`Parity::Odd`] the whole sequence
/// is reversed, so neighbouring buffers are scanned in opposite directions.
pub fn serpentine_order(geom: &PatchGeometry, parity: Parity) -> Vec<(usize, usize)> {
    let cols = geom.col_offsets();
    let mut out = Vec::with_capacity(geom.patch_count());
    for (i, &r) in geom.row_offsets().iter().enumerate() {
        if i % 2 == 0 {
            out.extend(cols.iter().map(|&c| (r, c)));
        } else {
            out.extend(cols.iter().rev().map(|&c| (r, c)));
        }
    }
    if parity == Parity::Odd {
        out.reverse();
    }
    out
}

/// An `n1 x n2 x m` block stored in vectorization order.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchTensor {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    data: Vec<f64>,
}

impl PatchTensor {
    pub fn zeros(n1: usize, n2: usize, m: usize) -> Self {
        Self {
            n1,
            n2,
            m,
            data: vec![0.0; n1 * n2 * m],
        }
    }

    pub fn index(&self, row: usize, col: usize, depth: usize) -> usize {
        depth * self.n1 * self.n2 + row * self.n2 + col
    }

    pub fn get(&self, row: usize, col: usize, depth: usize) -> f64 {
        self.data[self.index(row, col, depth)]
    }

    pub fn set(&mut self, row: usize, col: usize, depth: usize, v: f64) {
        let i = self.index(row, col, depth);
        self.data[i] = v;
    }
}

pub fn vectorize(t: &PatchTensor) -> Vec<f64> {
    t.data.clone()
}

pub fn tensorize(v: &[f64], n1: usize, n2: usize, m: usize) -> Result<PatchTensor> {
    if v.len() != n1 * n2 * m {
        return Err(Error::Shape(format!(
            "vector of length {} is not a {n1}x{n2}x{m} patch",
            v.len()
        )));
    }
    Ok(PatchTensor {
        n1,
        n2,
        m,
        data: v.to_vec(),
    })
}

pub(crate) fn check_buffer(buffer: &[Frame], geom: &PatchGeometry) -> Result<()> {
    if buffer.len() != geom.m {
        return Err(Error::Shape(format!(
            "buffer holds {} frames, patches span {}",
            buffer.len(),
            geom.m
        )));
    }
    if let Some(f) = buffer
        .iter()
        .find(|f| f.height() != geom.frame_h || f.width() != geom.frame_w)
    {
        return Err(Error::Shape(format!(
            "{}x{} frame in a {}x{} buffer",
            f.height(),
            f.width(),
            geom.frame_h,
            geom.frame_w
        )));
    }
    Ok(())
}

/// Copies the `n1 x n2` block at `(row, col)` of `frame` into `out`.
pub(crate) fn copy_slice(frame: &Frame, row: usize, col: usize, n1: usize, n2: usize, out: &mut [f64]) {
    for r in 0..n1 {
        let src = &frame.row(row + r)[col..col + n2];
        out[r * n2..(r + 1) * n2].copy_from_slice(src);
    }
}

/// Writes the vectorized patch at `pos` into `out` (length `geom.n()`).
pub fn extract_patch_into(
    buffer: &[Frame],
    geom: &PatchGeometry,
    pos: (usize, usize),
    out: &mut [f64],
) -> Result<()> {
    check_buffer(buffer, geom)?;
    geom.check_pos(pos.0, pos.1)?;
    if out.len() != geom.n() {
        return Err(Error::Shape(format!("output of length {} for n = {}", out.len(), geom.n())));
    }
    let s = geom.slice_len();
    for (d, frame) in buffer.iter().enumerate() {
        copy_slice(frame, pos.0, pos.1, geom.n1, geom.n2, &mut out[d * s..(d + 1) * s]);
    }
    Ok(())
}

pub fn extract_patch(buffer: &[Frame], geom: &PatchGeometry, pos: (usize, usize)) -> Result<Vec<f64>> {
    let mut out = vec![0.0; geom.n()];
    extract_patch_into(buffer, geom, pos, &mut out)?;
    Ok(out)
}

/// Output FIFO: per-pixel value sums and weight sums for `m` frames,
/// depth 0 being the oldest.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputAccumulator {
    frame_h: usize,
    frame_w: usize,
    values: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
}

impl OutputAccumulator {
    pub fn new(frame_h: usize, frame_w: usize, m: usize) -> Self {
        Self {
            frame_h,
            frame_w,
            values: vec![vec![0.0; frame_h * frame_w]; m],
            weights: vec![vec![0.0; frame_h * frame_w]; m],
        }
    }

    pub fn depth(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, depth: usize, row: usize, col: usize) -> f64 {
        self.values[depth][row * self.frame_w + col]
    }

    pub fn weight(&self, depth: usize, row: usize, col: usize) -> f64 {
        self.weights[depth][row * self.frame_w + col]
    }

    pub(crate) fn planes(&self) -> (&[Vec<f64>], &[Vec<f64>]) {
        (&self.values, &self.weights)
    }

    pub(crate) fn from_planes(
        frame_h: usize,
        frame_w: usize,
        values: Vec<Vec<f64>>,
        weights: Vec<Vec<f64>>,
    ) -> Self {
        Self {
            frame_h,
            frame_w,
            values,
            weights,
        }
    }

    /// Adds `weight * slice` for one `n1 x n2` slice at `(depth, row, col)`.
    pub(crate) fn deposit_slice(
        &mut self,
        depth: usize,
        row: usize,
        col: usize,
        n1: usize,
        n2: usize,
        slice: &[f64],
        weight: f64,
    ) {
        let w = self.frame_w;
        let values = &mut self.values[depth];
        let weights = &mut self.weights[depth];
        for r in 0..n1 {
            let base = (row + r) * w + col;
            for c in 0..n2 {
                values[base + c] += weight * slice[r * n2 + c];
                weights[base + c] += weight;
            }
        }
    }

    fn check_geometry(&self, geom: &PatchGeometry) -> Result<()> {
        if geom.frame_h != self.frame_h || geom.frame_w != self.frame_w || geom.m != self.depth() {
            return Err(Error::Shape(format!(
                "{}x{}x{} geometry for a {}x{}x{} accumulator",
                geom.frame_h,
                geom.frame_w,
                geom.m,
                self.frame_h,
                self.frame_w,
                self.depth()
            )));
        }
        Ok(())
    }

    /// Adds `weight * patch` over the voxels covered at `pos`, and `weight` to
    /// their weight sums. A zero weight is a no-op.
    pub fn deposit_patch(
        &mut self,
        geom: &PatchGeometry,
        pos: (usize, usize),
        patch: &[f64],
        weight: f64,
    ) -> Result<()> {
        self.check_geometry(geom)?;
        geom.check_pos(pos.0, pos.1)?;
        if patch.len() != geom.n() {
            return Err(Error::Shape(format!("patch of length {} for n = {}", patch.len(), geom.n())));
        }
        if weight == 0.0 {
            return Ok(());
        }
        let s = geom.slice_len();
        for d in 0..geom.m {
            self.deposit_slice(d, pos.0, pos.1, geom.n1, geom.n2, &patch[d * s..(d + 1) * s], weight);
        }
        Ok(())
    }

    /// Value sums divided by weight sums on plane `depth`.
    pub fn normalize_plane(&self, depth: usize) -> Result<Frame> {
        let values = &self.values[depth];
        let weights = &self.weights[depth];
        let mut data = Vec::with_capacity(values.len());
        for (i, (v, w)) in values.iter().zip(weights).enumerate() {
            if !(*w > 0.0) {
                return Err(Error::Coverage {
                    row: i / self.frame_w,
                    col: i % self.frame_w,
                });
            }
            data.push(v / w);
        }
        Frame::new(self.frame_h, self.frame_w, data)
    }

    /// Like [`Self::normalize_plane`], but pixels with no weight take the
    /// value of `fallback` instead of failing.
    pub fn normalize_plane_or(&self, depth: usize, fallback: &Frame) -> Result<Frame> {
        if fallback.height() != self.frame_h || fallback.width() != self.frame_w {
            return Err(Error::Shape("fallback frame does not match the accumulator".into()));
        }
        let data = self.values[depth]
            .iter()
            .zip(&self.weights[depth])
            .zip(fallback.data())
            .map(|((v, w), f)| if *w > 0.0 { v / w } else { *f })
            .collect();
        Frame::new(self.frame_h, self.frame_w, data)
    }

    pub fn normalize_oldest_frame(&self) -> Result<Frame> {
        self.normalize_plane(0)
    }

    /// Evicts the oldest value and weight planes and appends empty ones.
    pub fn shift(&mut self) {
        let mut v = self.values.remove(0);
        let mut w = self.weights.remove(0);
        v.fill(0.0);
        w.fill(0.0);
        self.values.push(v);
        self.weights.push(w);
    }
}
