//! Trains the pooled auto-encoder on a drifting texture, checkpoints it and
//! writes its decoder dictionary as a PGM image.
//!
//!     cargo run --release --example train_pooled_autoencoder -- [out_dir]

use std::path::PathBuf;

use slowpool::data::{generate, normalize, SequenceKind, SequenceSpec};
use slowpool::eval::{export_dictionary, mean_reconstruction_error};
use slowpool::train::{load_checkpoint, train_with, TrainConfig};

fn main() -> slowpool::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "slowpool-out".into()),
    );
    std::fs::create_dir_all(&out)?;

    let seq = normalize(&generate(&SequenceSpec {
        kind: SequenceKind::DriftingTexture,
        frames: 64,
        height: 8,
        width: 8,
        velocity: (0.31, 0.73),
        seed: 1,
        ..Default::default()
    })?);
    let ckpt = out.join("texture.ckpt");
    let config = TrainConfig {
        epochs: 40,
        hidden: 32,
        seed: 1,
        checkpoint_path: Some(ckpt.clone()),
        ..Default::default()
    };
    let init = slowpool::model::init_params(
        seq.frame_len(),
        config.hidden,
        config.group_size,
        config.stride,
        config.seed,
    )?;
    let (params, report) = train_with(init, &seq, &config, |epoch, s| {
        if epoch % 5 == 0 || epoch + 1 == config.epochs {
            println!(
                "epoch {:>3}: total {:8.3}  recon {:8.3}  l1 {:7.3}  slow {:7.3}  zeros {:.2}",
                epoch + 1,
                s.loss.total,
                s.loss.recon,
                s.loss.sparsity,
                s.loss.slowness,
                s.sparsity
            );
        }
    })?;
    println!("trained in {:.2}s", report.seconds);
    println!(
        "mean reconstruction error per frame: {:.4}",
        mean_reconstruction_error(&params, &seq)?
    );

    let restored = load_checkpoint(&ckpt)?;
    println!(
        "checkpoint {} holds {} hidden units in {} groups",
        ckpt.display(),
        restored.params.num_hidden(),
        restored.params.num_groups()
    );

    let dict = out.join("texture_dictionary.pgm");
    export_dictionary(&params, &dict)?;
    println!("dictionary written to {}", dict.display());
    Ok(())
}
