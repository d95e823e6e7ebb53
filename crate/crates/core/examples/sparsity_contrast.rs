//! Trains twice with and without the L1 penalty, from the same seed, and
//! writes both decoder dictionaries side by side for visual comparison.

use std::path::PathBuf;

use slowpool::data::{generate, normalize, SequenceKind, SequenceSpec};
use slowpool::eval::export_dictionary;
use slowpool::loss::Hyperparams;
use slowpool::train::{train, TrainConfig};

fn main() -> slowpool::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "slowpool-out".into()),
    );
    std::fs::create_dir_all(&out)?;
    let seq = normalize(&generate(&SequenceSpec {
        kind: SequenceKind::TranslatingBlob,
        frames: 64,
        height: 8,
        width: 8,
        velocity: (0.31, 0.73),
        blob_sigma: 1.2,
        seed: 3,
    })?);

    for alpha in [0.0, 0.5] {
        let config = TrainConfig {
            epochs: 50,
            hidden: 32,
            seed: 5,
            hyper: Hyperparams {
                alpha,
                ..Default::default()
            },
            ..Default::default()
        };
        let (params, report) = train(&seq, &config)?;
        let mean_zeros =
            report.epochs.iter().map(|e| e.sparsity).sum::<f64>() / report.epochs.len() as f64;
        let path = out.join(format!("dictionary_alpha_{alpha}.pgm"));
        export_dictionary(&params, &path)?;
        println!(
            "alpha {alpha}: zero fraction mean {mean_zeros:.3}, final epoch {:.3}; recon {:.3}; dictionary {}",
            report.last().unwrap().sparsity,
            report.last().unwrap().loss.recon,
            path.display()
        );
    }
    Ok(())
}
