//! Motion-compensated patch formation by exhaustive block matching.
//!
//! For a reference `n1 x n2` patch in the middle frame of the buffer, each
//! other frame contributes the single in-window patch closest to it in
//! Euclidean distance. The matched slices are stacked reference first, then
//! by increasing distance, so the stacking order is match order rather than
//! time order. [`deposit_bm`] is the adjoint: it puts each slice back where it
//! was found.

use crate::error::{Error, Result};
use crate::patches::{check_buffer, copy_slice, OutputAccumulator, PatchGeometry};
use crate::video::Frame;

/// One matched 2D patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmSlot {
    pub depth: usize,
    pub row: usize,
    pub col: usize,
    pub distance: f64,
}

/// The `m` matched patches for one reference position.
#[derive(Debug, Clone, PartialEq)]
pub struct BmRecord {
    pub ref_pos: (usize, usize),
    pub slots: Vec<BmSlot>,
}

/// Inclusive range of top-left offsets searched along one axis: the window of
/// side `h` is centered on the reference patch, so at most `(h - n) / 2`
/// pixels either way, clipped to the frame.
pub fn search_range(pos: usize, n: usize, h: usize, len: usize) -> (usize, usize) {
    let half = h.saturating_sub(n) / 2;
    (pos.saturating_sub(half), (pos + half).min(len - n))
}

/// Sum of squared differences between `reference` (an `n1 x n2` slice) and
/// the block of `frame` at `(row, col)`, accumulated in row-major order.
fn ssd(frame: &Frame, row: usize, col: usize, n1: usize, n2: usize, reference: &[f64]) -> f64 {
    let mut acc = 0.0;
    for r in 0..n1 {
        let src = &frame.row(row + r)[col..col + n2];
        let rf = &reference[r * n2..(r + 1) * n2];
        for (a, b) in src.iter().zip(rf) {
            let d = a - b;
            acc += d * d;
        }
    }
    acc
}

fn disp2(a: (usize, usize), b: (usize, usize)) -> usize {
    let dr = a.0.abs_diff(b.0);
    let dc = a.1.abs_diff(b.1);
    dr * dr + dc * dc
}

/// Matches the middle-frame patch at `ref_pos` against every other frame.
///
/// Ties within a frame go to the smaller displacement, then the earlier
/// position in row-major order. Slots after the first are ordered by
/// distance, then displacement, then depth.
pub fn block_match(
    buffer: &[Frame],
    geom: &PatchGeometry,
    ref_pos: (usize, usize),
    h1: usize,
    h2: usize,
) -> Result<BmRecord> {
    check_buffer(buffer, geom)?;
    if geom.m % 2 == 0 {
        return Err(Error::Config(format!("block matching needs odd m, got {}", geom.m)));
    }
    if !geom.contains(ref_pos.0, ref_pos.1) {
        return Err(Error::OutOfBounds {
            row: ref_pos.0,
            col: ref_pos.1,
            frame_h: geom.frame_h,
            frame_w: geom.frame_w,
        });
    }
    let (n1, n2) = (geom.n1, geom.n2);
    let mid = (geom.m - 1) / 2;
    let mut reference = vec![0.0; n1 * n2];
    copy_slice(&buffer[mid], ref_pos.0, ref_pos.1, n1, n2, &mut reference);

    let (r0, r1) = search_range(ref_pos.0, n1, h1, geom.frame_h);
    let (c0, c1) = search_range(ref_pos.1, n2, h2, geom.frame_w);

    let mut others = Vec::with_capacity(geom.m - 1);
    for (depth, frame) in buffer.iter().enumerate() {
        if depth == mid {
            continue;
        }
        // (ssd, displacement², position) compared lexicographically
        let mut best: Option<(f64, usize, (usize, usize))> = None;
        for r in r0..=r1 {
            for c in c0..=c1 {
                let d = ssd(frame, r, c, n1, n2, &reference);
                let cand = (d, disp2((r, c), ref_pos), (r, c));
                let better = match &best {
                    None => true,
                    Some(b) => cand.0 < b.0 || (cand.0 == b.0 && cand.1 < b.1),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (d, _, (row, col)) = best.expect("search window is never empty");
        others.push(BmSlot {
            depth,
            row,
            col,
            distance: d.sqrt(),
        });
    }
    others.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(disp2((a.row, a.col), ref_pos).cmp(&disp2((b.row, b.col), ref_pos)))
            .then(a.depth.cmp(&b.depth))
    });

    let mut slots = Vec::with_capacity(geom.m);
    slots.push(BmSlot {
        depth: mid,
        row: ref_pos.0,
        col: ref_pos.1,
        distance: 0.0,
    });
    slots.extend(others);
    Ok(BmRecord { ref_pos, slots })
}

fn check_record(geom: &PatchGeometry, rec: &BmRecord) -> Result<()> {
    if rec.slots.len() != geom.m {
        return Err(Error::Shape(format!(
            "record with {} slots for depth {}",
            rec.slots.len(),
            geom.m
        )));
    }
    for s in &rec.slots {
        if s.depth >= geom.m || !geom.contains(s.row, s.col) {
            return Err(Error::OutOfBounds {
                row: s.row,
                col: s.col,
                frame_h: geom.frame_h,
                frame_w: geom.frame_w,
            });
        }
    }
    Ok(())
}

/// Writes the matched slices of `rec`, in slot order, into `out`.
pub fn form_bm_patch_into(
    buffer: &[Frame],
    geom: &PatchGeometry,
    rec: &BmRecord,
    out: &mut [f64],
) -> Result<()> {
    check_buffer(buffer, geom)?;
    check_record(geom, rec)?;
    if out.len() != geom.n() {
        return Err(Error::Shape(format!("output of length {} for n = {}", out.len(), geom.n())));
    }
    let s = geom.slice_len();
    for (k, slot) in rec.slots.iter().enumerate() {
        copy_slice(
            &buffer[slot.depth],
            slot.row,
            slot.col,
            geom.n1,
            geom.n2,
            &mut out[k * s..(k + 1) * s],
        );
    }
    Ok(())
}

pub fn form_bm_patch(buffer: &[Frame], geom: &PatchGeometry, rec: &BmRecord) -> Result<Vec<f64>> {
    let mut out = vec![0.0; geom.n()];
    form_bm_patch_into(buffer, geom, rec, &mut out)?;
    Ok(out)
}

/// Adds slice `k` of `patch`, scaled by `weight`, at the location recorded in
/// slot `k`.
pub fn deposit_bm(
    acc: &mut OutputAccumulator,
    geom: &PatchGeometry,
    rec: &BmRecord,
    patch: &[f64],
    weight: f64,
) -> Result<()> {
    check_record(geom, rec)?;
    if patch.len() != geom.n() {
        return Err(Error::Shape(format!("patch of length {} for n = {}", patch.len(), geom.n())));
    }
    if acc.depth() != geom.m {
        return Err(Error::Shape(format!(
            "accumulator depth {} for m = {}",
            acc.depth(),
            geom.m
        )));
    }
    if weight == 0.0 {
        return Ok(());
    }
    let s = geom.slice_len();
    for (k, slot) in rec.slots.iter().enumerate() {
        acc.deposit_slice(
            slot.depth,
            slot.row,
            slot.col,
            geom.n1,
            geom.n2,
            &patch[k * s..(k + 1) * s],
            weight,
        );
    }
    Ok(())
}

/// Aggregation weight for a patch whose sparse code has `nonzeros` entries:
/// `1 / (1 + nonzeros)`.
pub fn patch_weight(nonzeros: usize) -> f64 {
    1.0 / (1.0 + nonzeros as f64)
}
