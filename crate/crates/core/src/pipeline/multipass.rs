use super::config::DenoiseConfig;
use super::engine::Engine;
use crate::error::{Error, Result};
use crate::transform::LearnerState;
use crate::video::{Frame, Video};

/// Noise left after denoising, estimated by variance subtraction:
/// `sqrt(max(0, sigma^2 - mean((noisy - denoised)^2)))`. Never exceeds
/// `sigma`.
pub fn estimate_remaining_noise(noisy: &Video, denoised: &Video, sigma: f64) -> Result<f64> {
    if !noisy.same_shape(denoised) {
        return Err(Error::Shape("noisy and denoised videos differ in shape".into()));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, b) in noisy.frames().iter().zip(denoised.frames()) {
        for (x, y) in a.data().iter().zip(b.data()) {
            sum += (x - y) * (x - y);
        }
        count += a.data().len();
    }
    let removed = sum / count as f64;
    Ok((sigma * sigma - removed).max(0.0).sqrt())
}

/// Progress of a (multi-pass) run, reported after every output frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    /// 1-based pass number.
    pub pass: usize,
    pub passes: usize,
    /// Noise level used for this pass's thresholds.
    pub sigma: f64,
    pub frames_done: usize,
    pub frames_total: usize,
}

fn stream(
    engine: &mut Engine,
    frames: &[Frame],
    mut on_frame: impl FnMut(usize),
) -> Result<Vec<Frame>> {
    let mut out = Vec::with_capacity(frames.len());
    for f in frames {
        if let Some(d) = engine.push_frame(f.clone())? {
            out.push(d);
            on_frame(out.len());
        }
    }
    for d in engine.flush()? {
        out.push(d);
        on_frame(out.len());
    }
    Ok(out)
}

/// One streaming pass over `video` at `config.sigma`.
pub fn denoise_stream(video: &Video, config: &DenoiseConfig) -> Result<Video> {
    let mut engine = Engine::new(config.clone(), video.height(), video.width())?;
    check_length(video, config)?;
    let frames = stream(&mut engine, video.frames(), |_| {})?;
    video.with_frames(frames)
}

fn check_length(video: &Video, config: &DenoiseConfig) -> Result<()> {
    if video.frame_count() < config.m {
        return Err(Error::Config(format!(
            "{} frames is fewer than the temporal depth {}",
            video.frame_count(),
            config.m
        )));
    }
    Ok(())
}

/// Runs `config.passes` full streaming passes. Pass `l > 1` denoises the
/// output of pass `l - 1` with its noise level re-estimated against the
/// original noisy video.
pub fn run_multipass(video: &Video, config: &DenoiseConfig) -> Result<Video> {
    run_multipass_with_progress(video, config, |_| {})
}

pub fn run_multipass_with_progress(
    video: &Video,
    config: &DenoiseConfig,
    mut progress: impl FnMut(Progress),
) -> Result<Video> {
    config.validate()?;
    check_length(video, config)?;
    let mut current = video.clone();
    let mut carried: Option<(LearnerState, Option<LearnerState>)> = None;
    let mut sigma = config.sigma;
    for pass in 1..=config.passes {
        if pass > 1 {
            sigma = estimate_remaining_noise(video, &current, config.sigma)?;
            if sigma == 0.0 {
                // nothing left to remove; thresholds of zero would be a no-op
                break;
            }
        }
        let mut pass_config = config.clone();
        pass_config.sigma = sigma;
        let mut engine = Engine::new(pass_config, video.height(), video.width())?;
        if let Some((learner, pre)) = carried.take() {
            engine.set_learners(learner, pre)?;
        }
        let total = current.frame_count();
        let frames = stream(&mut engine, current.frames(), |done| {
            progress(Progress {
                pass,
                passes: config.passes,
                sigma,
                frames_done: done,
                frames_total: total,
            })
        })?;
        if !config.reset_between_passes {
            carried = Some(engine.into_learners());
        }
        current = video.with_frames(frames)?;
    }
    Ok(current)
}
