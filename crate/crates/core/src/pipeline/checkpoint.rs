//! Engine snapshots, so a stream can be stopped and resumed bit-exactly.
//!
//! Layout (little-endian): magic `b"TLENGINE"`, version u32, config JSON
//! (u64 length + UTF-8), frame height and width (u64), pushed / emitted /
//! buffer counters (u64), flushed flag (u8), the main learner, a u8 flag and
//! the pre-cleaning learner when present, the input FIFO (u64 count, then
//! frames as f64), and the output FIFO's value and weight planes.

use std::collections::VecDeque;
use std::io::{Read, Write};

use super::config::DenoiseConfig;
use super::engine::Engine;
use crate::error::{Error, Result};
use crate::patches::{OutputAccumulator, PatchGeometry};
use crate::transform::LearnerState;
use crate::video::Frame;

const MAGIC: &[u8; 8] = b"TLENGINE";
const VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> Error {
    Error::Checkpoint(e.to_string())
}

fn put(out: &mut impl Write, bytes: &[u8]) -> Result<()> {
    out.write_all(bytes).map_err(io_err)
}

fn put_plane(out: &mut impl Write, plane: &[f64]) -> Result<()> {
    for v in plane {
        put(out, &v.to_le_bytes())?;
    }
    Ok(())
}

fn take<const N: usize>(input: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    input.read_exact(&mut b).map_err(io_err)?;
    Ok(b)
}

fn take_u64(input: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(take(input)?))
}

fn take_plane(input: &mut impl Read, len: usize) -> Result<Vec<f64>> {
    let mut v = Vec::with_capacity(len);
    for _ in 0..len {
        v.push(f64::from_le_bytes(take(input)?));
    }
    Ok(v)
}

impl Engine {
    pub fn write_checkpoint(&self, out: &mut impl Write) -> Result<()> {
        put(out, MAGIC)?;
        put(out, &VERSION.to_le_bytes())?;
        let json = self.config.to_json();
        put(out, &(json.len() as u64).to_le_bytes())?;
        put(out, json.as_bytes())?;
        for v in [
            self.geom.frame_h as u64,
            self.geom.frame_w as u64,
            self.pushed,
            self.emitted,
            self.buffers,
        ] {
            put(out, &v.to_le_bytes())?;
        }
        put(out, &[self.flushed as u8])?;
        self.learner.write_checkpoint(out)?;
        match &self.precleaner {
            Some(p) => {
                put(out, &[1])?;
                p.write_checkpoint(out)?;
            }
            None => put(out, &[0])?,
        }
        put(out, &(self.fifo.len() as u64).to_le_bytes())?;
        for f in &self.fifo {
            put_plane(out, f.data())?;
        }
        let (values, weights) = self.acc.planes();
        for plane in values.iter().chain(weights) {
            put_plane(out, plane)?;
        }
        Ok(())
    }

    pub fn read_checkpoint(input: &mut impl Read) -> Result<Self> {
        if &take::<8>(input)? != MAGIC {
            return Err(Error::Checkpoint("bad engine magic".into()));
        }
        let version = u32::from_le_bytes(take(input)?);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let len = take_u64(input)? as usize;
        if len > 1 << 20 {
            return Err(Error::Checkpoint("implausible config length".into()));
        }
        let mut json = vec![0u8; len];
        input.read_exact(&mut json).map_err(io_err)?;
        let json = String::from_utf8(json).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let config = DenoiseConfig::from_json(&json)?;
        config.validate()?;
        let frame_h = take_u64(input)? as usize;
        let frame_w = take_u64(input)? as usize;
        let pushed = take_u64(input)?;
        let emitted = take_u64(input)?;
        let buffers = take_u64(input)?;
        let flushed = take::<1>(input)?[0] != 0;
        let geom = PatchGeometry::with_stride(
            config.n1,
            config.n2,
            config.m,
            frame_h,
            frame_w,
            config.stride,
        )?;
        let learner = LearnerState::read_checkpoint(input)?;
        let precleaner = match take::<1>(input)?[0] {
            0 => None,
            _ => Some(LearnerState::read_checkpoint(input)?),
        };
        for l in std::iter::once(&learner).chain(precleaner.as_ref()) {
            if l.dim() != geom.n() {
                return Err(Error::Checkpoint("learner does not match the patch size".into()));
            }
        }
        let count = take_u64(input)? as usize;
        if count > config.m {
            return Err(Error::Checkpoint(format!("{count} buffered frames for m = {}", config.m)));
        }
        let pixels = frame_h * frame_w;
        let mut fifo = VecDeque::with_capacity(config.m);
        for _ in 0..count {
            fifo.push_back(Frame::new(frame_h, frame_w, take_plane(input, pixels)?)?);
        }
        let mut planes = Vec::with_capacity(2 * config.m);
        for _ in 0..2 * config.m {
            planes.push(take_plane(input, pixels)?);
        }
        let weights = planes.split_off(config.m);
        let acc = OutputAccumulator::from_planes(frame_h, frame_w, planes, weights);
        Ok(Engine {
            config,
            geom,
            fifo,
            acc,
            learner,
            precleaner,
            pushed,
            emitted,
            buffers,
            flushed,
        })
    }
}
