use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Frame, Video};
use crate::error::{Error, Result};

/// Adds i.i.d. zero-mean Gaussian noise with standard deviation `sigma`.
///
/// Samples come from `ChaCha8Rng::seed_from_u64(seed)` through `rand_distr`'s
/// ziggurat `StandardNormal`, drawn frame by frame in row-major order, so a
/// given `(seed, shape, sigma)` always produces the same video. The result is
/// not clamped.
pub fn add_gaussian_noise(video: &Video, sigma: f64, seed: u64) -> Result<Video> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Config(format!("noise sigma {sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        return Ok(video.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = video
        .frames()
        .iter()
        .map(|f| {
            let data = f
                .data()
                .iter()
                .map(|&v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v + sigma * z
                })
                .collect();
            Frame::new(f.height(), f.width(), data)
        })
        .collect::<Result<Vec<_>>>()?;
    video.with_frames(frames)
}
