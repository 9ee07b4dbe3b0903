//! YUV4MPEG2, numbered binary PGM sequences, and headerless 8-bit raw gray.
//!
//! Only the luminance plane is read; chroma planes are skipped. Samples are
//! mapped to `f64` without scaling. Writers quantize with [`quantize`].

use std::fs;
use std::path::{Path, PathBuf};

use super::{quantize, Frame, SourceFormat, Video};
use crate::error::{Error, Result};

/// Container format for [`read_video`] / [`write_video`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Container {
    /// YUV4MPEG2 stream, `C mono` or 4:2:0.
    Y4m,
    /// Numbered P5 files. The path is a pattern with one `%d` or `%0Nd`
    /// placeholder, e.g. `frames/f%04d.pgm`. Reading starts at index 0 or 1,
    /// whichever exists, and stops at the first gap; writing starts at 1.
    PgmSequence,
    /// Concatenated 8-bit frames without any header.
    RawGray { width: usize, height: usize },
}

impl Container {
    pub fn source_format(&self) -> SourceFormat {
        match self {
            Container::Y4m => SourceFormat::Y4m,
            Container::PgmSequence => SourceFormat::PgmSequence,
            Container::RawGray { .. } => SourceFormat::RawGray,
        }
    }
}

pub fn read_video(path: impl AsRef<Path>, container: &Container) -> Result<Video> {
    let path = path.as_ref();
    match container {
        Container::Y4m => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_y4m(&bytes)
        }
        Container::PgmSequence => read_pgm_sequence(path),
        Container::RawGray { width, height } => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_raw(&bytes, *width, *height)
        }
    }
}

pub fn write_video(video: &Video, path: impl AsRef<Path>, container: &Container) -> Result<()> {
    let path = path.as_ref();
    match container {
        Container::Y4m => fs::write(path, encode_y4m(video)).map_err(|e| Error::io(path, e)),
        Container::PgmSequence => {
            for (i, frame) in video.frames().iter().enumerate() {
                let p = expand_pattern(path, i + 1)?;
                fs::write(&p, encode_pgm(frame)).map_err(|e| Error::io(&p, e))?;
            }
            Ok(())
        }
        Container::RawGray { width, height } => {
            if *width != video.width() || *height != video.height() {
                return Err(Error::Shape(format!(
                    "raw output declared {width}x{height}, video is {}x{}",
                    video.width(),
                    video.height()
                )));
            }
            let mut out = Vec::with_capacity(video.width() * video.height() * video.frame_count());
            for f in video.frames() {
                out.extend(f.data().iter().map(|&v| quantize(v)));
            }
            fs::write(path, out).map_err(|e| Error::io(path, e))
        }
    }
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

fn frame_from_bytes(bytes: &[u8], height: usize, width: usize) -> Frame {
    Frame::from_fn(height, width, |r, c| bytes[r * width + c] as f64)
}

/// Reads one `\n`-terminated line starting at `pos`; returns the line and the
/// offset just past the newline.
fn read_line(bytes: &[u8], pos: usize) -> Result<(&[u8], usize)> {
    let end = bytes[pos..]
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| parse_err(pos, "unterminated header line"))?;
    Ok((&bytes[pos..pos + end], pos + end + 1))
}

fn parse_y4m(bytes: &[u8]) -> Result<Video> {
    let (header, mut pos) = read_line(bytes, 0)?;
    let header = std::str::from_utf8(header).map_err(|_| parse_err(0, "header is not ASCII"))?;
    let mut tokens = header.split(' ').filter(|t| !t.is_empty());
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(parse_err(0, "missing YUV4MPEG2 signature"));
    }
    let (mut width, mut height) = (None, None);
    let mut colorspace = "420jpeg".to_string();
    let mut frame_rate = (30, 1);
    for tok in tokens {
        let (tag, value) = tok.split_at(1);
        match tag {
            "W" => width = value.parse::<usize>().ok(),
            "H" => height = value.parse::<usize>().ok(),
            "C" => colorspace = value.to_string(),
            "F" => {
                if let Some((n, d)) = value.split_once(':') {
                    if let (Ok(n), Ok(d)) = (n.parse(), d.parse()) {
                        if d != 0 {
                            frame_rate = (n, d);
                        }
                    }
                }
            }
            _ => {}
        }
    }
    let (width, height) = match (width, height) {
        (Some(w), Some(h)) if w > 0 && h > 0 => (w, h),
        _ => return Err(parse_err(0, "header lacks valid W and H tags")),
    };
    let chroma = match colorspace.as_str() {
        "mono" => 0,
        "420" | "420jpeg" | "420paldv" | "420mpeg2" => 2 * width.div_ceil(2) * height.div_ceil(2),
        other => return Err(Error::UnsupportedColorspace(other.to_string())),
    };
    let luma = width * height;
    let mut frames = Vec::new();
    while pos < bytes.len() {
        let (line, next) = read_line(bytes, pos)?;
        if !line.starts_with(b"FRAME") {
            return Err(parse_err(pos, "expected FRAME marker"));
        }
        pos = next;
        if bytes.len() < pos + luma + chroma {
            return Err(parse_err(pos, format!("truncated frame {}", frames.len())));
        }
        frames.push(frame_from_bytes(&bytes[pos..pos + luma], height, width));
        pos += luma + chroma;
    }
    if frames.is_empty() {
        return Err(parse_err(pos, "stream contains no frames"));
    }
    let mut video = Video::new(frames, SourceFormat::Y4m)?;
    video.frame_rate = frame_rate;
    Ok(video)
}

fn encode_y4m(video: &Video) -> Vec<u8> {
    let (w, h) = (video.width(), video.height());
    let chroma = 2 * w.div_ceil(2) * h.div_ceil(2);
    let (num, den) = video.frame_rate;
    let mut out = format!("YUV4MPEG2 W{w} H{h} F{num}:{den} Ip A1:1 C420jpeg\n").into_bytes();
    out.reserve(video.frame_count() * (6 + w * h + chroma));
    for f in video.frames() {
        out.extend_from_slice(b"FRAME\n");
        out.extend(f.data().iter().map(|&v| quantize(v)));
        out.extend(std::iter::repeat_n(128u8, chroma));
    }
    out
}

fn parse_raw(bytes: &[u8], width: usize, height: usize) -> Result<Video> {
    let size = width * height;
    if size == 0 {
        return Err(Error::Config("raw input needs non-zero width and height".into()));
    }
    if bytes.is_empty() || bytes.len() % size != 0 {
        return Err(parse_err(
            bytes.len() - bytes.len() % size,
            format!("{} bytes is not a whole number of {width}x{height} frames", bytes.len()),
        ));
    }
    let frames = bytes
        .chunks_exact(size)
        .map(|chunk| frame_from_bytes(chunk, height, width))
        .collect();
    Video::new(frames, SourceFormat::RawGray)
}

/// Substitutes `index` into the single `%d` / `%0Nd` placeholder of `pattern`.
fn expand_pattern(pattern: &Path, index: usize) -> Result<PathBuf> {
    let s = pattern.to_string_lossy();
    let start = s
        .find('%')
        .ok_or_else(|| Error::Config(format!("PGM pattern `{s}` has no %d placeholder")))?;
    let rest = &s[start + 1..];
    let d = rest
        .find('d')
        .ok_or_else(|| Error::Config(format!("PGM pattern `{s}` has a malformed placeholder")))?;
    let spec = &rest[..d];
    let width = if spec.is_empty() {
        0
    } else if spec.starts_with('0') && spec.chars().all(|c| c.is_ascii_digit()) {
        spec.parse::<usize>().unwrap_or(0)
    } else {
        return Err(Error::Config(format!("unsupported placeholder `%{spec}d`")));
    };
    Ok(PathBuf::from(format!(
        "{}{:0width$}{}",
        &s[..start],
        index,
        &rest[d + 1..],
        width = width
    )))
}

fn read_pgm_sequence(pattern: &Path) -> Result<Video> {
    let first = [0, 1]
        .into_iter()
        .map(|i| expand_pattern(pattern, i).map(|p| (i, p)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .find(|(_, p)| p.exists());
    let (mut index, _) = first.ok_or_else(|| {
        Error::io(
            pattern,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no frame at index 0 or 1"),
        )
    })?;
    let mut frames = Vec::new();
    loop {
        let p = expand_pattern(pattern, index)?;
        if !p.exists() {
            break;
        }
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        frames.push(parse_pgm(&bytes)?);
        index += 1;
    }
    Video::new(frames, SourceFormat::PgmSequence)
}

/// Parses one binary PGM (P5, maxval 255).
fn parse_pgm(bytes: &[u8]) -> Result<Frame> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(pos, "truncated PGM header"));
        }
        fields.push((start, &bytes[start..pos]));
    }
    if fields[0].1 != b"P5" {
        return Err(parse_err(0, "not a binary PGM (P5)"));
    }
    let number = |(offset, field): (usize, &[u8])| -> Result<usize> {
        std::str::from_utf8(field)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(offset, "invalid PGM header number"))
    };
    let width = number(fields[1])?;
    let height = number(fields[2])?;
    let maxval = number(fields[3])?;
    if maxval != 255 {
        return Err(parse_err(fields[3].0, format!("maxval {maxval} (only 255 supported)")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let size = width * height;
    if size == 0 || bytes.len() < pos + size {
        return Err(parse_err(pos, "truncated PGM raster"));
    }
    Ok(frame_from_bytes(&bytes[pos..pos + size], height, width))
}

fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend(frame.data().iter().map(|&v| quantize(v)));
    out
}
