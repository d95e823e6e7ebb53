//! Uses a trained encoder as a distance between frames and scores it by
//! nearest-neighbour temporal retrieval on a sequence it has not seen.

use slowpool::data::{generate, normalize, SequenceKind, SequenceSpec};
use slowpool::eval::{evaluate, FeatureNorm};
use slowpool::train::{train, TrainConfig};

fn main() -> slowpool::Result<()> {
    let family = |seed| SequenceSpec {
        kind: SequenceKind::DriftingTexture,
        frames: 64,
        height: 12,
        width: 12,
        velocity: (0.31, 0.73),
        seed,
        ..Default::default()
    };
    let train_seq = normalize(&generate(&family(100))?);
    let held_out = normalize(&generate(&family(101))?);
    let config = TrainConfig {
        epochs: 30,
        hidden: 72,
        seed: 1,
        ..Default::default()
    };
    let (params, _) = train(&train_seq, &config)?;

    for norm in [FeatureNorm::L1, FeatureNorm::L2] {
        let report = evaluate(&held_out, &params, 8, norm)?;
        println!("{report}");
    }
    Ok(())
}
