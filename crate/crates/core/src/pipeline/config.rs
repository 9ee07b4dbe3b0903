use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How 3D patches are formed and whether the transform adapts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Co-located patches, adaptive transform.
    A1,
    /// Block-matched patches, adaptive transform.
    A2,
    /// Co-located patches, transform fixed at the 3D DCT.
    Dct3d,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a1" => Ok(Mode::A1),
            "a2" => Ok(Mode::A2),
            "dct3d" => Ok(Mode::Dct3d),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::A1 => "a1",
            Mode::A2 => "a2",
            Mode::Dct3d => "dct3d",
        })
    }
}

/// Which buffer the block-matched patch values are read from when
/// pre-cleaning is on. Matching itself always uses the pre-cleaned buffer.
///
/// The default is [`BmValues::Noisy`]: denoising pre-cleaned values again at
/// the full noise level over-smooths, most visibly on static content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BmValues {
    Precleaned,
    Noisy,
}

impl FromStr for BmValues {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "precleaned" => Ok(BmValues::Precleaned),
            "noisy" => Ok(BmValues::Noisy),
            other => Err(Error::Config(format!("unknown block-matching source `{other}`"))),
        }
    }
}

/// Forgetting factor and pass count per noise level.
const SIGMA_TABLE: [(f64, f64, usize); 5] = [
    (5.0, 0.68, 1),
    (10.0, 0.72, 2),
    (15.0, 0.76, 3),
    (20.0, 0.83, 3),
    (50.0, 0.89, 4),
];

/// `(rho, passes)` of the tabulated noise level nearest to `sigma`; exact
/// midpoints go to the larger level.
pub fn schedule_for_sigma(sigma: f64) -> (f64, usize) {
    let mut best = SIGMA_TABLE[0];
    for entry in SIGMA_TABLE {
        if (entry.0 - sigma).abs() <= (best.0 - sigma).abs() {
            best = entry;
        }
    }
    (best.1, best.2)
}

/// Every tunable of a denoising run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    /// Thresholds are `alpha0 * sigma`.
    pub alpha0: f64,
    pub lambda0: f64,
    /// Mini-batch size `M`.
    pub batch_size: usize,
    pub rho: f64,
    pub passes: usize,
    /// Noise standard deviation on the 0..255 scale.
    pub sigma: f64,
    /// Block-matching window.
    pub h1: usize,
    pub h2: usize,
    pub mode: Mode,
    /// Recorded for provenance; the pipeline itself draws no random numbers.
    pub seed: u64,
    pub stride: usize,
    /// A2 only: match on a buffer pre-cleaned by a co-located sweep.
    pub preclean: bool,
    /// A2 only: where patch values come from when pre-cleaning.
    pub bm_values: BmValues,
    /// A2 only: aggregate with weights `1 / (1 + nonzeros)`.
    pub sparsity_weights: bool,
    pub reset_between_passes: bool,
    /// Sparse-coding/update rounds per mini-batch.
    pub alternations: usize,
}

impl DenoiseConfig {
    pub fn new(sigma: f64) -> Self {
        let (rho, passes) = schedule_for_sigma(sigma);
        Self {
            n1: 8,
            n2: 8,
            m: 9,
            alpha0: 1.9,
            lambda0: 1e-2,
            batch_size: 15 * 9 * 8 * 8,
            rho,
            passes,
            sigma,
            h1: 21,
            h2: 21,
            mode: Mode::A1,
            seed: 0,
            stride: 1,
            preclean: true,
            bm_values: BmValues::Noisy,
            sparsity_weights: true,
            reset_between_passes: true,
            alternations: 1,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    /// Patch length `n1 * n2 * m`.
    pub fn n(&self) -> usize {
        self.n1 * self.n2 * self.m
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n1 == 0 || self.n2 == 0 || self.m == 0 {
            return fail(format!("patch size {}x{}x{} must be positive", self.n1, self.n2, self.m));
        }
        if self.mode == Mode::A2 && self.m % 2 == 0 {
            return fail(format!("block matching needs an odd temporal depth m, got {}", self.m));
        }
        if !(self.alpha0 >= 0.0) || !self.alpha0.is_finite() {
            return fail(format!("alpha0 = {} must be finite and >= 0", self.alpha0));
        }
        if !(self.lambda0 > 0.0) || !self.lambda0.is_finite() {
            return fail(format!("lambda0 = {} must be finite and > 0", self.lambda0));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return fail(format!("rho = {} outside [0, 1]", self.rho));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return fail(format!("sigma = {} must be finite and > 0", self.sigma));
        }
        if self.batch_size == 0 || self.passes == 0 || self.stride == 0 || self.alternations == 0 {
            return fail("batch_size, passes, stride and alternations must be >= 1".into());
        }
        if self.stride > self.n1.min(self.n2) {
            return fail(format!(
                "stride {} exceeds the patch side and would leave pixels uncovered",
                self.stride
            ));
        }
        if self.mode == Mode::A2 && (self.h1 < self.n1 || self.h2 < self.n2) {
            return fail(format!(
                "search window {}x{} smaller than the {}x{} patch",
                self.h1, self.h2, self.n1, self.n2
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config always serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}
