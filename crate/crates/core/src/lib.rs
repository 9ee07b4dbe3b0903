//! Streaming video denoising with an online-learned square 3D sparsifying
//! transform.
//!
//! Frames are pushed one at a time into an `m`-deep FIFO. Every buffer is cut
//! into overlapping `n1 x n2 x m` spatio-temporal patches, which are denoised
//! in mini-batches by hard thresholding in a transform that is re-fitted in
//! closed form after every mini-batch. Denoised patches are aggregated into an
//! output FIFO and the oldest frame is emitted, giving a fixed latency of
//! `m - 1` frames. An optional block-matching mode builds motion-compensated
//! 3D patches instead of co-located ones.
//!
//! Module map:
//!
//! * [`linalg`]: dense kernels (symmetric square root, SVD, inversion).
//! * [`transform`]: the mini-batch transform learner.
//! * [`patches`]: patch geometry, extraction, deposit and normalization.
//! * [`blockmatch`]: exhaustive block matching and its adjoint deposit.
//! * [`pipeline`]: the streaming engine and multi-pass driver.
//! * [`video`]: video containers, noise synthesis, PSNR and test clips.

pub mod blockmatch;
pub mod error;
pub mod linalg;
pub mod patches;
pub mod pipeline;
pub mod transform;
pub mod video;

pub use error::{Error, Result};
