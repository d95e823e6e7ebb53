use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FrameSequence;
use crate::error::{Error, Result};
use crate::numerics::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    /// Isotropic Gaussian bump moving at constant velocity on a torus.
    TranslatingBlob,
    /// Smoothed random field translated with bilinear interpolation on a torus.
    DriftingTexture,
    /// Every pixel of every frame holds the same seeded value.
    Constant,
}

impl SequenceKind {
    pub fn name(self) -> &'static str {
        match self {
            SequenceKind::TranslatingBlob => "translating_blob",
            SequenceKind::DriftingTexture => "drifting_texture",
            SequenceKind::Constant => "constant",
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translating_blob" => Ok(SequenceKind::TranslatingBlob),
            "drifting_texture" => Ok(SequenceKind::DriftingTexture),
            "constant" => Ok(SequenceKind::Constant),
            other => Err(Error::InvalidArgument(format!(
                "unknown sequence kind `{other}` (expected translating_blob, drifting_texture or constant)"
            ))),
        }
    }
}

/// Recipe for a synthetic sequence. Generation is a pure function of the spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    /// Displacement `(dy, dx)` in pixels per frame.
    pub velocity: (f64, f64),
    /// Blob radius, or smoothing radius of the texture.
    pub blob_sigma: f64,
    pub seed: u64,
}

impl Default for SequenceSpec {
    fn default() -> Self {
        Self {
            kind: SequenceKind::DriftingTexture,
            frames: 64,
            height: 16,
            width: 16,
            velocity: (0.0, 1.0),
            blob_sigma: 2.0,
            seed: 0,
        }
    }
}

impl SequenceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 frames, got {}",
                self.frames
            )));
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidArgument("frame dims must be >= 1".into()));
        }
        if !(self.velocity.0.is_finite() && self.velocity.1.is_finite()) {
            return Err(Error::InvalidArgument("velocity must be finite".into()));
        }
        if self.kind != SequenceKind::Constant
            && !(self.blob_sigma > 0.0 && self.blob_sigma.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "sigma must be positive, got {}",
                self.blob_sigma
            )));
        }
        Ok(())
    }

    /// Displacement after `t` frames, reduced onto the torus.
    fn shift(&self, t: usize) -> (f64, f64) {
        (
            (t as f64 * self.velocity.0).rem_euclid(self.height as f64),
            (t as f64 * self.velocity.1).rem_euclid(self.width as f64),
        )
    }
}

pub fn generate(spec: &SequenceSpec) -> Result<FrameSequence> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (h, w) = (spec.height, spec.width);
    let frames = match spec.kind {
        SequenceKind::Constant => {
            let v = rng.gen_range(-1.0..1.0);
            vec![Image::filled(h, w, v); spec.frames]
        }
        SequenceKind::TranslatingBlob => {
            let c0 = (rng.gen_range(0.0..h as f64), rng.gen_range(0.0..w as f64));
            let inv = 1.0 / (2.0 * spec.blob_sigma * spec.blob_sigma);
            (0..spec.frames)
                .map(|t| {
                    let (sy, sx) = spec.shift(t);
                    let (cy, cx) = (c0.0 + sy, c0.1 + sx);
                    Image::from_fn(h, w, |y, x| {
                        let dy = torus_distance(y as f64 - cy, h as f64);
                        let dx = torus_distance(x as f64 - cx, w as f64);
                        (-(dy * dy + dx * dx) * inv).exp()
                    })
                })
                .collect()
        }
        SequenceKind::DriftingTexture => {
            let noise = Image::from_fn(h, w, |_, _| rng.gen_range(-1.0..1.0));
            let field = circular_blur(&noise, spec.blob_sigma);
            (0..spec.frames)
                .map(|t| {
                    let (sy, sx) = spec.shift(t);
                    Image::from_fn(h, w, |y, x| {
                        bilinear_wrap(&field, y as f64 - sy, x as f64 - sx)
                    })
                })
                .collect()
        }
    };
    FrameSequence::new(frames)
}

fn torus_distance(d: f64, period: f64) -> f64 {
    let d = d.rem_euclid(period);
    d.min(period - d)
}

fn bilinear_wrap(img: &Image, y: f64, x: f64) -> f64 {
    let (h, w) = (img.height() as f64, img.width() as f64);
    let (y, x) = (y.rem_euclid(h), x.rem_euclid(w));
    let (y0, x0) = (y.floor(), x.floor());
    let (fy, fx) = (y - y0, x - x0);
    let (y0, x0) = (y0 as usize % img.height(), x0 as usize % img.width());
    let (y1, x1) = ((y0 + 1) % img.height(), (x0 + 1) % img.width());
    img.get(y0, x0) * (1.0 - fy) * (1.0 - fx)
        + img.get(y0, x1) * (1.0 - fy) * fx
        + img.get(y1, x0) * fy * (1.0 - fx)
        + img.get(y1, x1) * fy * fx
}

/// Separable Gaussian blur with periodic boundaries.
fn circular_blur(img: &Image, sigma: f64) -> Image {
    let radius = (3.0 * sigma).ceil() as isize;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = weights.iter().sum();
    let (h, w) = (img.height() as isize, img.width() as isize);
    let rows = Image::from_fn(img.height(), img.width(), |y, x| {
        weights
            .iter()
            .enumerate()
            .map(|(k, wt)| {
                let xx = (x as isize + k as isize - radius).rem_euclid(w) as usize;
                wt * img.get(y, xx)
            })
            .sum::<f64>()
            / norm
    });
    Image::from_fn(img.height(), img.width(), |y, x| {
        weights
            .iter()
            .enumerate()
            .map(|(k, wt)| {
                let yy = (y as isize + k as isize - radius).rem_euclid(h) as usize;
                wt * rows.get(yy, x)
            })
            .sum::<f64>()
            / norm
    })
}
