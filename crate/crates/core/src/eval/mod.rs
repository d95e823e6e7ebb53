//! The trained encoder as a metric on frames: nearest-neighbour temporal
//! retrieval against a pixel baseline, distance as a function of temporal gap,
//! decoder refitting and dictionary images.

mod dictionary;
mod reconstruction;

pub use dictionary::{
    conv_dictionary_image, dictionary_image, encode_pgm, export_conv_dictionary, export_dictionary,
    GrayImage,
};
pub use reconstruction::{
    fit_decoder_least_squares, fit_pooled_decoder, mean_reconstruction_error,
    pooled_reconstruction_error,
};

use std::fmt;

use rayon::prelude::*;

use crate::data::FrameSequence;
use crate::error::{Error, Result};
use crate::loss::feature_distance;
use crate::model::{encode_fc, ModelParams};

/// Norm used to compare pooled feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureNorm {
    #[default]
    L1,
    L2,
}

impl FeatureNorm {
    fn order(self) -> f64 {
        match self {
            FeatureNorm::L1 => 1.0,
            FeatureNorm::L2 => 2.0,
        }
    }
}

impl fmt::Display for FeatureNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureNorm::L1 => "l1",
            FeatureNorm::L2 => "l2",
        })
    }
}

impl std::str::FromStr for FeatureNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" | "L1" => Ok(FeatureNorm::L1),
            "l2" | "L2" => Ok(FeatureNorm::L2),
            _ => Err(Error::InvalidArgument(format!(
                "unknown norm `{s}` (expected l1 or l2)"
            ))),
        }
    }
}

/// How two frames are compared.
#[derive(Debug, Clone, Copy)]
pub enum Metric<'a> {
    /// Euclidean distance between raw pixel vectors.
    Pixel,
    /// Distance between pooled features of the encoder.
    Learned(&'a ModelParams, FeatureNorm),
}

/// `Σ_i |z_a,i − z_b,i|`, the L1 distance between the pooled features of two frames.
pub fn pooled_distance(x_a: &[f64], x_b: &[f64], params: &ModelParams) -> Result<f64> {
    if x_a.len() != x_b.len() {
        return Err(Error::shape(
            "pooled_distance",
            format!("second input of length {}", x_a.len()),
            format!("length {}", x_b.len()),
        ));
    }
    let za = encode_fc(x_a, params)?.pooled;
    let zb = encode_fc(x_b, params)?.pooled;
    Ok(feature_distance(&za, &zb, 1.0))
}

fn pooled_features(seq: &FrameSequence, params: &ModelParams) -> Result<Vec<Vec<f64>>> {
    seq.frames()
        .par_iter()
        .map(|f| encode_fc(f.as_slice(), params).map(|a| a.pooled))
        .collect()
}

/// Per-frame embedding and norm order for `metric`.
fn embed(seq: &FrameSequence, metric: Metric) -> Result<(Vec<Vec<f64>>, f64)> {
    match metric {
        Metric::Pixel => Ok((
            seq.frames().iter().map(|f| f.as_slice().to_vec()).collect(),
            2.0,
        )),
        Metric::Learned(params, norm) => Ok((pooled_features(seq, params)?, norm.order())),
    }
}

/// Fraction of frames whose nearest other frame under `metric` is a temporal
/// neighbour. Ties go to the smaller frame index.
pub fn temporal_precision_at_1(seq: &FrameSequence, metric: Metric) -> Result<f64> {
    let t_len = seq.len();
    if t_len < 3 {
        return Err(Error::InvalidArgument(format!(
            "precision@1 needs at least 3 frames, got {t_len}"
        )));
    }
    let (emb, p) = embed(seq, metric)?;
    let hits: usize = (0..t_len)
        .into_par_iter()
        .map(|t| {
            let mut best = (f64::INFINITY, usize::MAX);
            for u in (0..t_len).filter(|&u| u != t) {
                let d = feature_distance(&emb[t], &emb[u], p);
                if d < best.0 {
                    best = (d, u);
                }
            }
            usize::from(best.1.abs_diff(t) == 1)
        })
        .sum();
    Ok(hits as f64 / t_len as f64)
}

/// Mean [`pooled_distance`] between frames `t` and `t + g` for `g = 1..=max_gap`.
pub fn distance_by_gap(
    seq: &FrameSequence,
    params: &ModelParams,
    max_gap: usize,
) -> Result<Vec<(usize, f64)>> {
    if max_gap == 0 || max_gap >= seq.len() {
        return Err(Error::InvalidArgument(format!(
            "max_gap must lie in 1..{}, got {max_gap}",
            seq.len()
        )));
    }
    let z = pooled_features(seq, params)?;
    Ok((1..=max_gap)
        .map(|g| {
            let count = seq.len() - g;
            let sum: f64 = (0..count)
                .map(|t| feature_distance(&z[t], &z[t + g], 1.0))
                .sum();
            (g, sum / count as f64)
        })
        .collect())
}

/// Retrieval scores for one model and sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub frames: usize,
    pub precision_learned: f64,
    pub precision_pixel: f64,
    /// `2 / (T − 1)`, the expected score of a random ranking.
    pub precision_chance: f64,
    pub norm: FeatureNorm,
    /// `(gap, mean pooled distance)` for gaps `1..=max_gap`.
    pub gap_distances: Vec<(usize, f64)>,
}

impl MetricReport {
    pub fn mean_distance_at(&self, gap: usize) -> Option<f64> {
        self.gap_distances
            .iter()
            .find(|(g, _)| *g == gap)
            .map(|(_, d)| *d)
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "frames: {}", self.frames)?;
        writeln!(f, "learned_norm: {}", self.norm)?;
        writeln!(f, "precision_at_1_learned: {:.6}", self.precision_learned)?;
        writeln!(f, "precision_at_1_pixel: {:.6}", self.precision_pixel)?;
        writeln!(f, "precision_at_1_chance: {:.6}", self.precision_chance)?;
        writeln!(f)?;
        writeln!(f, "gap,mean_distance")?;
        for (g, d) in &self.gap_distances {
            writeln!(f, "{g},{d:.6}")?;
        }
        Ok(())
    }
}

/// Learned and pixel precision@1 plus the gap profile up to `max_gap`.
pub fn evaluate(
    seq: &FrameSequence,
    params: &ModelParams,
    max_gap: usize,
    norm: FeatureNorm,
) -> Result<MetricReport> {
    Ok(MetricReport {
        frames: seq.len(),
        precision_learned: temporal_precision_at_1(seq, Metric::Learned(params, norm))?,
        precision_pixel: temporal_precision_at_1(seq, Metric::Pixel)?,
        precision_chance: 2.0 / (seq.len() - 1) as f64,
        norm,
        gap_distances: distance_by_gap(seq, params, max_gap)?,
    })
}
