//! Binary checkpoint of a [`LearnerState`].
//!
//! Layout (all integers and floats little-endian):
//!
//! | field            | type       |
//! |------------------|------------|
//! | magic            | `b"TLSTATE\0"` |
//! | version          | u32 (= 1)  |
//! | n                | u64        |
//! | rho              | f64        |
//! | lambda0          | f64        |
//! | beta             | f64        |
//! | minibatch_count  | u64        |
//! | adaptive         | u8 (0/1)   |
//! | alternations     | u32        |
//! | w, w_inv, gamma, theta | n*n f64 each, row-major |

use std::io::{Read, Write};

use faer::Mat;

use super::LearnerState;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const MAGIC: &[u8; 8] = b"TLSTATE\0";
const VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> Error {
    Error::Checkpoint(e.to_string())
}

fn write_matrix(out: &mut impl Write, m: &Matrix) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.write_all(&m[(i, j)].to_le_bytes()).map_err(io_err)?;
        }
    }
    Ok(())
}

pub(crate) fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b).map_err(io_err)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64(input: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b).map_err(io_err)?;
    Ok(f64::from_le_bytes(b))
}

fn read_u32(input: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b).map_err(io_err)?;
    Ok(u32::from_le_bytes(b))
}

fn read_matrix(input: &mut impl Read, n: usize) -> Result<Matrix> {
    let mut data = vec![0.0; n * n];
    for x in data.iter_mut() {
        *x = read_f64(input)?;
        if !x.is_finite() {
            return Err(Error::Checkpoint("non-finite matrix entry".into()));
        }
    }
    Ok(Mat::from_fn(n, n, |i, j| data[i * n + j]))
}

impl LearnerState {
    pub fn write_checkpoint(&self, out: &mut impl Write) -> Result<()> {
        out.write_all(MAGIC).map_err(io_err)?;
        out.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
        out.write_all(&(self.dim() as u64).to_le_bytes()).map_err(io_err)?;
        for v in [self.rho, self.lambda0, self.beta] {
            out.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
        out.write_all(&self.minibatch_count.to_le_bytes()).map_err(io_err)?;
        out.write_all(&[self.adaptive as u8]).map_err(io_err)?;
        out.write_all(&(self.alternations as u32).to_le_bytes()).map_err(io_err)?;
        for m in [&self.w, &self.w_inv, &self.gamma, &self.theta] {
            write_matrix(out, m)?;
        }
        Ok(())
    }

    pub fn read_checkpoint(input: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(io_err)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad learner magic".into()));
        }
        let version = read_u32(input)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let n = read_u64(input)? as usize;
        if n == 0 || n > 1 << 14 {
            return Err(Error::Checkpoint(format!("implausible dimension {n}")));
        }
        let rho = read_f64(input)?;
        let lambda0 = read_f64(input)?;
        let beta = read_f64(input)?;
        let minibatch_count = read_u64(input)?;
        let mut flag = [0u8; 1];
        input.read_exact(&mut flag).map_err(io_err)?;
        let alternations = read_u32(input)? as usize;
        let w = read_matrix(input, n)?;
        let w_inv = read_matrix(input, n)?;
        let gamma = read_matrix(input, n)?;
        let theta = read_matrix(input, n)?;
        if !(0.0..=1.0).contains(&rho) || !(lambda0 > 0.0) || !(beta >= 0.0) {
            return Err(Error::Checkpoint("hyperparameters out of range".into()));
        }
        Ok(Self {
            w,
            w_inv,
            gamma,
            theta,
            beta,
            rho,
            lambda0,
            minibatch_count,
            adaptive: flag[0] != 0,
            alternations: alternations.max(1),
        })
    }
}
