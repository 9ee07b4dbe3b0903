use std::collections::VecDeque;

use faer::Mat;
use rayon::prelude::*;

use super::config::{BmValues, DenoiseConfig, Mode};
use crate::blockmatch::{block_match, deposit_bm, form_bm_patch_into, patch_weight, BmRecord};
use crate::error::{Error, Result};
use crate::patches::{extract_patch_into, serpentine_order, OutputAccumulator, Parity, PatchGeometry};
use crate::transform::{LearnerState, MiniBatch};
use crate::video::Frame;

/// Single-pass streaming denoiser.
///
/// Frames go in one at a time. Nothing comes out until `m` frames have
/// arrived; from then on every push processes the whole buffer and returns
/// the oldest frame of the output FIFO, so output `k` is input `k` delayed by
/// exactly `m - 1` pushes. [`Engine::flush`] drains the remaining `m - 1`.
#[derive(Debug, Clone)]
pub struct Engine {
    pub(super) config: DenoiseConfig,
    pub(super) geom: PatchGeometry,
    pub(super) fifo: VecDeque<Frame>,
    pub(super) acc: OutputAccumulator,
    pub(super) learner: LearnerState,
    /// Co-located learner used to pre-clean buffers before block matching.
    pub(super) precleaner: Option<LearnerState>,
    pub(super) pushed: u64,
    pub(super) emitted: u64,
    pub(super) buffers: u64,
    pub(super) flushed: bool,
}

impl Engine {
    pub fn new(config: DenoiseConfig, frame_h: usize, frame_w: usize) -> Result<Self> {
        config.validate()?;
        let geom = PatchGeometry::with_stride(
            config.n1,
            config.n2,
            config.m,
            frame_h,
            frame_w,
            config.stride,
        )?;
        let learner = Self::fresh_learner(&config)?;
        let precleaner = if config.mode == Mode::A2 && config.preclean {
            Some(Self::fresh_adaptive(&config)?)
        } else {
            None
        };
        Ok(Self {
            acc: OutputAccumulator::new(frame_h, frame_w, config.m),
            fifo: VecDeque::with_capacity(config.m),
            config,
            geom,
            learner,
            precleaner,
            pushed: 0,
            emitted: 0,
            buffers: 0,
            flushed: false,
        })
    }

    fn fresh_adaptive(config: &DenoiseConfig) -> Result<LearnerState> {
        Ok(
            LearnerState::with_dct(config.n1, config.n2, config.m, config.rho, config.lambda0)?
                .with_alternations(config.alternations),
        )
    }

    fn fresh_learner(config: &DenoiseConfig) -> Result<LearnerState> {
        let l = Self::fresh_adaptive(config)?;
        Ok(if config.mode == Mode::Dct3d { l.frozen() } else { l })
    }

    pub fn config(&self) -> &DenoiseConfig {
        &self.config
    }

    pub fn geometry(&self) -> &PatchGeometry {
        &self.geom
    }

    pub fn learner(&self) -> &LearnerState {
        &self.learner
    }

    pub fn precleaner(&self) -> Option<&LearnerState> {
        self.precleaner.as_ref()
    }

    /// Replaces the learners, e.g. to carry them over from a previous pass.
    pub fn set_learners(&mut self, learner: LearnerState, precleaner: Option<LearnerState>) -> Result<()> {
        if learner.dim() != self.geom.n() {
            return Err(Error::Shape(format!(
                "{n}x{n} learner for patches of length {}",
                self.geom.n(),
                n = learner.dim()
            )));
        }
        self.learner = learner;
        if self.precleaner.is_some() {
            if let Some(p) = precleaner {
                self.precleaner = Some(p);
            }
        }
        Ok(())
    }

    pub fn into_learners(self) -> (LearnerState, Option<LearnerState>) {
        (self.learner, self.precleaner)
    }

    pub fn frames_pushed(&self) -> u64 {
        self.pushed
    }

    pub fn frames_emitted(&self) -> u64 {
        self.emitted
    }

    /// Pushes one noisy frame; returns a denoised frame once the buffer is
    /// full.
    pub fn push_frame(&mut self, frame: Frame) -> Result<Option<Frame>> {
        if self.flushed {
            return Err(Error::Config("engine was already flushed".into()));
        }
        if frame.height() != self.geom.frame_h || frame.width() != self.geom.frame_w {
            return Err(Error::Shape(format!(
                "{}x{} frame pushed into a {}x{} stream",
                frame.height(),
                frame.width(),
                self.geom.frame_h,
                self.geom.frame_w
            )));
        }
        self.fifo.push_back(frame);
        if self.fifo.len() > self.config.m {
            self.fifo.pop_front();
        }
        self.pushed += 1;
        if self.fifo.len() < self.config.m {
            return Ok(None);
        }
        if self.buffers > 0 {
            self.acc.shift();
        }
        let buffer: Vec<Frame> = self.fifo.iter().cloned().collect();
        let parity = Parity::of(self.buffers);
        let out = match self.config.mode {
            Mode::A1 | Mode::Dct3d => {
                self.process_colocated(&buffer, parity)?;
                self.acc.normalize_oldest_frame()?
            }
            Mode::A2 => {
                // Frames ahead of the middle of the very first buffer are
                // only reached through matches and may have holes.
                let fallback = self.process_matched(&buffer, parity)?;
                self.acc.normalize_plane_or(0, &fallback)?
            }
        };
        self.buffers += 1;
        self.emitted += 1;
        Ok(Some(out))
    }

    /// Drains the pipeline by pushing `m - 1` copies of the last frame.
    /// A second call returns nothing.
    pub fn flush(&mut self) -> Result<Vec<Frame>> {
        if self.flushed {
            return Ok(Vec::new());
        }
        if self.pushed < self.config.m as u64 {
            return Err(Error::NotStarted(format!(
                "flush after {} of the {} frames needed to start",
                self.pushed, self.config.m
            )));
        }
        let last = self.fifo.back().cloned().expect("buffer is full");
        let mut out = Vec::with_capacity(self.config.m - 1);
        for _ in 1..self.config.m {
            if let Some(f) = self.push_frame(last.clone())? {
                out.push(f);
            }
        }
        self.flushed = true;
        Ok(out)
    }

    fn alpha(&self) -> f64 {
        self.config.alpha0 * self.config.sigma
    }

    fn process_colocated(&mut self, buffer: &[Frame], parity: Parity) -> Result<()> {
        let alpha = self.alpha();
        let geom = self.geom;
        let order = serpentine_order(&geom, parity);
        sweep_colocated(&mut self.learner, &mut self.acc, buffer, &geom, &order, self.config.batch_size, alpha)
    }

    /// Returns the plane that fills uncovered pixels of the oldest frame:
    /// its pre-cleaned version, or the noisy frame without pre-cleaning.
    fn process_matched(&mut self, buffer: &[Frame], parity: Parity) -> Result<Frame> {
        let alpha = self.alpha();
        let geom = self.geom;
        let order = serpentine_order(&geom, parity);
        let cleaned = match self.precleaner.as_mut() {
            Some(pre) => {
                let mut scratch = OutputAccumulator::new(geom.frame_h, geom.frame_w, geom.m);
                sweep_colocated(pre, &mut scratch, buffer, &geom, &order, self.config.batch_size, alpha)?;
                Some((0..geom.m).map(|d| scratch.normalize_plane(d)).collect::<Result<Vec<_>>>()?)
            }
            None => None,
        };
        let match_on: &[Frame] = cleaned.as_deref().unwrap_or(buffer);
        let values: &[Frame] = match self.config.bm_values {
            BmValues::Precleaned => match_on,
            BmValues::Noisy => buffer,
        };
        let (h1, h2) = (self.config.h1, self.config.h2);
        let records: Vec<BmRecord> = order
            .par_iter()
            .map(|&pos| block_match(match_on, &geom, pos, h1, h2))
            .collect::<Result<_>>()?;

        let n = geom.n();
        for chunk in records.chunks(self.config.batch_size) {
            let mut u = Mat::<f64>::zeros(n, chunk.len());
            for (j, rec) in chunk.iter().enumerate() {
                form_bm_patch_into(values, &geom, rec, u.col_as_slice_mut(j))?;
            }
            let out = self.learner.denoise_minibatch(&MiniBatch::uniform(u, alpha)?)?;
            for (j, rec) in chunk.iter().enumerate() {
                let weight = if self.config.sparsity_weights {
                    patch_weight(out.codes.nonzeros(j))
                } else {
                    1.0
                };
                deposit_bm(&mut self.acc, &geom, rec, out.patches.col_as_slice(j), weight)?;
            }
        }
        Ok(match_on[0].clone())
    }
}

/// Denoises every co-located patch of `buffer` in `order`, in mini-batches of
/// at most `batch_size`, and deposits them with unit weight. The last batch
/// of a buffer may be short.
fn sweep_colocated(
    learner: &mut LearnerState,
    acc: &mut OutputAccumulator,
    buffer: &[Frame],
    geom: &PatchGeometry,
    order: &[(usize, usize)],
    batch_size: usize,
    alpha: f64,
) -> Result<()> {
    let n = geom.n();
    for chunk in order.chunks(batch_size) {
        let mut u = Mat::<f64>::zeros(n, chunk.len());
        for (j, &pos) in chunk.iter().enumerate() {
            extract_patch_into(buffer, geom, pos, u.col_as_slice_mut(j))?;
        }
        let out = learner.denoise_minibatch(&MiniBatch::uniform(u, alpha)?)?;
        for (j, &pos) in chunk.iter().enumerate() {
            acc.deposit_patch(geom, pos, out.patches.col_as_slice(j), 1.0)?;
        }
    }
    Ok(())
}
