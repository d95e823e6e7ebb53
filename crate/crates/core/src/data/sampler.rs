use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FrameSequence;
use crate::error::{Error, Result};
use crate::loss::FramePair;

const SAMPLER_STREAM: u64 = 2;

/// Deterministic stream of training pairs drawn from one sequence.
///
/// With probability `neighbor_prob` a pair `(t, t+1)` is drawn with `t`
/// uniform; otherwise `(t, t')` is drawn uniformly among ordered pairs with
/// `|t − t'| ≥ 2`.
#[derive(Debug, Clone)]
pub struct PairSampler<'a> {
    seq: &'a FrameSequence,
    neighbor_prob: f64,
    rng: ChaCha8Rng,
}

impl<'a> PairSampler<'a> {
    pub fn new(seq: &'a FrameSequence, neighbor_prob: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&neighbor_prob) {
            return Err(Error::InvalidArgument(format!(
                "neighbor_prob must lie in [0, 1], got {neighbor_prob}"
            )));
        }
        if seq.len() < 3 && neighbor_prob < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "a {}-frame sequence has no non-neighbour pairs",
                seq.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SAMPLER_STREAM);
        Ok(Self {
            seq,
            neighbor_prob,
            rng,
        })
    }

    /// Next pair of frame indices `(t, t')`.
    pub fn next_indices(&mut self) -> (usize, usize) {
        let n = self.seq.len();
        if self.rng.gen::<f64>() < self.neighbor_prob {
            let t = self.rng.gen_range(0..n - 1);
            (t, t + 1)
        } else {
            loop {
                let t = self.rng.gen_range(0..n);
                let u = self.rng.gen_range(0..n);
                if t.abs_diff(u) >= 2 {
                    return (t, u);
                }
            }
        }
    }

    pub fn next_pair(&mut self) -> FramePair {
        let (t, u) = self.next_indices();
        FramePair {
            a: self.seq.frame(t).clone(),
            b: self.seq.frame(u).clone(),
            gap: t.abs_diff(u),
        }
    }
}

impl Iterator for PairSampler<'_> {
    type Item = FramePair;

    fn next(&mut self) -> Option<FramePair> {
        Some(self.next_pair())
    }
}

/// First pair of the stream seeded with `rng_seed`.
pub fn sample_pair(seq: &FrameSequence, neighbor_prob: f64, rng_seed: u64) -> Result<FramePair> {
    Ok(PairSampler::new(seq, neighbor_prob, rng_seed)?.next_pair())
}
