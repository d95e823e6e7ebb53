//! Temporally coherent feature learning with a pooled auto-encoder.
//!
//! A rectified linear encoder feeds L2 pooling over groups of hidden units;
//! a linear decoder reconstructs the input from the hidden units. Training
//! runs on pairs of frames from a sequence and combines reconstruction error,
//! an L1 penalty on hidden units and a slowness penalty on the difference of
//! pooled features between the two frames. A contrastive pair loss on the same
//! encoder serves as a baseline, and the trained encoder doubles as a metric
//! between frames.
//!
//! ```
//! use slowpool::data::{generate, normalize, SequenceSpec};
//! use slowpool::train::{train, TrainConfig};
//!
//! let seq = normalize(&generate(&SequenceSpec { frames: 16, height: 4, width: 4, ..Default::default() })?);
//! let config = TrainConfig { epochs: 2, pairs_per_epoch: 32, hidden: 8, ..Default::default() };
//! let (params, report) = train(&seq, &config)?;
//! assert_eq!(report.epochs.len(), 2);
//! assert_eq!(params.num_hidden(), 8);
//! # Ok::<(), slowpool::Error>(())
//! ```

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod loss;
pub mod model;
pub mod numerics;
pub mod train;

pub use error::{Error, Result};
