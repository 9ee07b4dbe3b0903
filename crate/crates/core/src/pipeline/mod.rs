//! The streaming engine and the multi-pass driver.
//!
//! [`Engine`] is the single-pass streaming denoiser. [`run_multipass`] runs
//! whole-video passes back to back, re-estimating the remaining noise before
//! each one. Because every pass needs the complete output of the previous
//! one, the end-to-end delay of a multi-pass run is the full video; each
//! individual pass keeps the `m - 1` frame latency.

mod checkpoint;
mod config;
mod engine;
mod multipass;

pub use config::{schedule_for_sigma, BmValues, DenoiseConfig, Mode};
pub use engine::Engine;
pub use multipass::{
    denoise_stream, estimate_remaining_noise, run_multipass, run_multipass_with_progress, Progress,
};
