//! Temporally coherent frame sequences: synthetic generators, pair sampling,
//! normalization and the on-disk sequence format.

mod format;
mod generate;
mod sampler;

pub use format::{decode_sequence, encode_sequence, load_sequence, save_sequence, SEQUENCE_MAGIC};
pub use generate::{generate, SequenceKind, SequenceSpec};
pub use sampler::{sample_pair, PairSampler};

use crate::error::{Error, Result};
use crate::numerics::Image;

/// An ordered run of equally sized grayscale frames, `T ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    height: usize,
    width: usize,
    frames: Vec<Image>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Image>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a sequence needs at least 2 frames, got {}",
                frames.len()
            )));
        }
        let (height, width) = frames[0].dims();
        if let Some((t, f)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| f.dims() != (height, width))
        {
            return Err(Error::shape(
                "FrameSequence::new",
                format!("frame {t} of {height}x{width}"),
                format!("{}x{}", f.height(), f.width()),
            ));
        }
        if let Some(t) = frames
            .iter()
            .position(|f| f.as_slice().iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidArgument(format!(
                "frame {t} has non-finite pixels"
            )));
        }
        Ok(Self {
            height,
            width,
            frames,
        })
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Pixels per frame.
    pub fn frame_len(&self) -> usize {
        self.height * self.width
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> &Image {
        &self.frames[t]
    }

    /// The same frames in a different order; `order` must be a permutation of `0..T`.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        for &t in order {
            if t >= self.len() || std::mem::replace(&mut seen[t], true) {
                return Err(Error::InvalidArgument("order is not a permutation".into()));
            }
        }
        if order.len() != self.len() {
            return Err(Error::InvalidArgument("order is not a permutation".into()));
        }
        Self::new(order.iter().map(|&t| self.frames[t].clone()).collect())
    }
}

/// Subtracts each frame's mean, then rescales globally so the per-frame
/// standard deviation averages one. Constant frames become all zeros.
pub fn normalize(seq: &FrameSequence) -> FrameSequence {
    let n = seq.frame_len() as f64;
    let mut sd_sum = 0.0;
    let centered: Vec<Image> = seq
        .frames
        .iter()
        .map(|f| {
            let first = f.as_slice()[0];
            if f.as_slice().iter().all(|&v| v == first) {
                return Image::zeros(f.height(), f.width());
            }
            let mean = f.as_slice().iter().sum::<f64>() / n;
            let mut c = f.clone();
            c.as_mut_slice().iter_mut().for_each(|v| *v -= mean);
            sd_sum += (c.as_slice().iter().map(|v| v * v).sum::<f64>() / n).sqrt();
            c
        })
        .collect();
    let mean_sd = sd_sum / seq.len() as f64;
    let frames = if mean_sd > 0.0 {
        centered
            .into_iter()
            .map(|mut f| {
                f.as_mut_slice().iter_mut().for_each(|v| *v /= mean_sd);
                f
            })
            .collect()
    } else {
        centered
    };
    FrameSequence {
        height: seq.height,
        width: seq.width,
        frames,
    }
}
