//! Siamese minibatch training with SGD and momentum, plus checkpoints.

mod checkpoint;
mod optimizer;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use optimizer::{sgd_step, OptimizerState, ParamBuffers};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::data::{FrameSequence, PairSampler};
use crate::error::{Error, Result};
use crate::loss::{drlim_step, full_step, Gradients, Hyperparams, LossBreakdown};
use crate::model::{init_params, ModelParams};

/// Which loss the trainer minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    /// Reconstruction, L1 sparsity and pooled slowness.
    #[default]
    Full,
    /// Contrastive loss on pooled features; the decoder is left untouched.
    Drlim,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Full => "full",
            Objective::Drlim => "drlim",
        })
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Objective::Full),
            "drlim" => Ok(Objective::Drlim),
            _ => Err(Error::InvalidArgument(format!(
                "unknown objective `{s}` (expected full or drlim)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub pairs_per_epoch: usize,
    pub batch_size: usize,
    pub hyper: Hyperparams,
    pub objective: Objective,
    /// Probability that a sampled pair is a temporal neighbour.
    pub neighbor_prob: f64,
    /// Seeds both the initialization and the pair stream.
    pub seed: u64,
    /// Hidden units `N`; only used when the trainer initializes the model.
    pub hidden: usize,
    pub group_size: usize,
    pub stride: usize,
    /// Written after every epoch when set.
    pub checkpoint_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            pairs_per_epoch: 256,
            batch_size: 16,
            hyper: Hyperparams::default(),
            objective: Objective::Full,
            neighbor_prob: 0.5,
            seed: 0,
            hidden: 64,
            group_size: 4,
            stride: 2,
            checkpoint_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("pairs_per_epoch", self.pairs_per_epoch),
            ("batch_size", self.batch_size),
            ("hidden", self.hidden),
            ("group_size", self.group_size),
            ("stride", self.stride),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("{name} must be >= 1")));
        }
        if self.batch_size > self.pairs_per_epoch {
            return Err(Error::InvalidArgument(format!(
                "batch_size {} exceeds pairs_per_epoch {}",
                self.batch_size, self.pairs_per_epoch
            )));
        }
        if !(0.0..=1.0).contains(&self.neighbor_prob) {
            return Err(Error::InvalidArgument(format!(
                "neighbor_prob must lie in [0, 1], got {}",
                self.neighbor_prob
            )));
        }
        self.hyper.validate()?;
        if self.objective == Objective::Full {
            self.hyper.require_p2("training")?;
        }
        Ok(())
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.pairs_per_epoch / self.batch_size
    }
}

/// Means over the pairs seen during one epoch, measured before each update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub loss: LossBreakdown,
    /// Fraction of hidden activations that were exactly zero.
    pub sparsity: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub seconds: f64,
}

impl TrainReport {
    pub fn first(&self) -> Option<&EpochStats> {
        self.epochs.first()
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

/// Initializes a model from `config` and trains it on `seq`, which should
/// already be normalized.
pub fn train(seq: &FrameSequence, config: &TrainConfig) -> Result<(ModelParams, TrainReport)> {
    config.validate()?;
    let params = init_params(
        seq.frame_len(),
        config.hidden,
        config.group_size,
        config.stride,
        config.seed,
    )?;
    train_from(params, seq, config)
}

/// Continues training from `params`.
pub fn train_from(
    params: ModelParams,
    seq: &FrameSequence,
    config: &TrainConfig,
) -> Result<(ModelParams, TrainReport)> {
    train_with(params, seq, config, |_, _| {})
}

/// Like [`train_from`], calling `on_epoch(epoch, stats)` after every epoch.
///
/// On a non-finite loss training stops with [`Error::Diverged`]; the
/// checkpoint file, if any, still holds the last completed epoch.
pub fn train_with(
    mut params: ModelParams,
    seq: &FrameSequence,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &EpochStats),
) -> Result<(ModelParams, TrainReport)> {
    config.validate()?;
    if seq.frame_len() != params.input_dim() {
        return Err(Error::shape(
            "train",
            format!("frames with {} pixels", params.input_dim()),
            format!("{} pixels", seq.frame_len()),
        ));
    }
    let started = Instant::now();
    let mut sampler = PairSampler::new(seq, config.neighbor_prob, config.seed)?;
    let mut state = OptimizerState::new(&params);
    let hyper = &config.hyper;
    let step_fn = match config.objective {
        Objective::Full => full_step,
        Objective::Drlim => drlim_step,
    };
    let steps = config.steps_per_epoch();
    let pairs = (steps * config.batch_size) as f64;
    let units = (2 * params.num_hidden()) as f64 * pairs;
    let mut report = TrainReport::default();

    for epoch in 0..config.epochs {
        let epoch_start = Instant::now();
        let mut loss_sum = LossBreakdown::default();
        let mut zeros = 0usize;
        for step in 0..steps {
            let batch: Vec<_> = (&mut sampler).take(config.batch_size).collect();
            let outcomes = batch
                .par_iter()
                .map(|pair| step_fn(pair, &params, hyper))
                .collect::<Result<Vec<_>>>()?;

            // summed in batch order regardless of which thread finished first
            let mut grads = Gradients::zeros_like(&params);
            let mut batch_loss = LossBreakdown::default();
            for o in &outcomes {
                grads.add_assign(&o.grads);
                batch_loss += o.loss;
                zeros += o.zero_hidden;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged { epoch, step });
            }
            grads.scale(1.0 / config.batch_size as f64);
            sgd_step(&mut params, &grads, &mut state, hyper)?;
            loss_sum += batch_loss;
        }
        let stats = EpochStats {
            loss: loss_sum.scaled(1.0 / pairs),
            sparsity: zeros as f64 / units,
            seconds: epoch_start.elapsed().as_secs_f64(),
        };
        if let Some(path) = &config.checkpoint_path {
            save_checkpoint(&params, hyper, path)?;
        }
        on_epoch(epoch, &stats);
        report.epochs.push(stats);
    }
    report.seconds = started.elapsed().as_secs_f64();
    Ok((params, report))
}
