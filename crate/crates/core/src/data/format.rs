//! Sequence file: 8-byte magic `SFVSEQ1\0`, then `T`, `H`, `W` as little-endian
//! `u32`, then `T·H·W` little-endian `f32` pixels, frame-major then row-major.

use std::fs;
use std::path::Path;

use super::FrameSequence;
use crate::error::{Error, Result};
use crate::numerics::Image;

pub const SEQUENCE_MAGIC: &[u8; 8] = b"SFVSEQ1\0";
const HEADER_LEN: usize = 8 + 3 * 4;

pub fn encode_sequence(seq: &FrameSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * seq.len() * seq.frame_len());
    out.extend_from_slice(SEQUENCE_MAGIC);
    for d in [seq.len(), seq.height(), seq.width()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for f in seq.frames() {
        for &v in f.as_slice() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_sequence(bytes: &[u8]) -> Result<FrameSequence> {
    if bytes.len() < SEQUENCE_MAGIC.len() {
        return Err(Error::format(
            bytes.len() as u64,
            "file too short for magic bytes",
        ));
    }
    if &bytes[..8] != SEQUENCE_MAGIC {
        return Err(Error::format(0, "bad magic, not a sequence file"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(bytes.len() as u64, "truncated header"));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap());
    let (t, h, w) = (dim(0), dim(1), dim(2));
    let count = (t as u64)
        .checked_mul(h as u64)
        .and_then(|v| v.checked_mul(w as u64))
        .filter(|&v| v.checked_mul(4).is_some_and(|b| usize::try_from(b).is_ok()))
        .ok_or_else(|| Error::format(8, format!("dimensions {t}x{h}x{w} overflow")))?;
    if t < 2 || h == 0 || w == 0 {
        return Err(Error::format(
            8,
            format!("invalid dimensions T={t}, H={h}, W={w}"),
        ));
    }
    let expected = HEADER_LEN as u64 + 4 * count;
    if bytes.len() as u64 != expected {
        return Err(Error::format(
            (bytes.len() as u64).min(expected),
            format!("file is {} bytes, header implies {expected}", bytes.len()),
        ));
    }
    let (t, h, w) = (t as usize, h as usize, w as usize);
    let mut frames = Vec::with_capacity(t);
    let mut offset = HEADER_LEN;
    for _ in 0..t {
        let mut data = Vec::with_capacity(h * w);
        for _ in 0..h * w {
            let v = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::format(offset as u64, "non-finite pixel"));
            }
            data.push(v as f64);
            offset += 4;
        }
        frames.push(Image::from_vec(h, w, data)?);
    }
    FrameSequence::new(frames)
}

pub fn save_sequence(seq: &FrameSequence, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_sequence(seq))?;
    Ok(())
}

pub fn load_sequence(path: impl AsRef<Path>) -> Result<FrameSequence> {
    decode_sequence(&fs::read(path)?)
}
