//! Trains the same encoder with the contrastive pair loss and with the full
//! objective, then compares how well each representation lets a linear map
//! recover the frames.

use slowpool::data::{generate, normalize, FrameSequence, SequenceKind, SequenceSpec};
use slowpool::eval::{fit_pooled_decoder, mean_reconstruction_error, pooled_reconstruction_error};
use slowpool::loss::{feature_distance, Hyperparams};
use slowpool::model::{encode_fc, init_params, ModelParams};
use slowpool::train::{train, Objective, TrainConfig};

fn distances(seq: &FrameSequence, params: &ModelParams, margin: f64) -> (f64, f64, f64) {
    let z: Vec<_> = seq
        .frames()
        .iter()
        .map(|f| encode_fc(f.as_slice(), params).unwrap().pooled)
        .collect();
    let (mut near, mut far, mut hinge, mut nn, mut nf) = (0.0, 0.0, 0.0, 0, 0);
    for t in 0..z.len() {
        for u in t + 1..z.len() {
            let d = feature_distance(&z[t], &z[u], 2.0);
            if u == t + 1 {
                near += d;
                nn += 1;
            } else {
                far += d;
                hinge += (margin - d).max(0.0);
                nf += 1;
            }
        }
    }
    (near / nn as f64, far / nf as f64, hinge / nf as f64)
}

fn main() -> slowpool::Result<()> {
    let seq = normalize(&generate(&SequenceSpec {
        kind: SequenceKind::DriftingTexture,
        frames: 64,
        height: 8,
        width: 8,
        velocity: (0.31, 0.73),
        seed: 100,
        ..Default::default()
    })?);
    let full_cfg = TrainConfig {
        epochs: 100,
        hidden: 32,
        neighbor_prob: 0.1,
        hyper: Hyperparams {
            margin: 3.0,
            ..Default::default()
        },
        seed: 1,
        ..Default::default()
    };
    let drlim_cfg = TrainConfig {
        objective: Objective::Drlim,
        ..full_cfg.clone()
    };
    let m = drlim_cfg.hyper.margin;

    let init = init_params(seq.frame_len(), 32, 4, 2, 1)?;
    let (drlim, report) = train(&seq, &drlim_cfg)?;
    let (full, _) = train(&seq, &full_cfg)?;
    println!(
        "contrastive term per pair: epoch 1 {:.4}, epoch {} {:.4}",
        report.epochs[0].loss.contrastive,
        report.epochs.len(),
        report.last().unwrap().loss.contrastive
    );
    for (label, p) in [("initial", &init), ("contrastive", &drlim), ("full", &full)] {
        let (near, far, hinge) = distances(&seq, p, m);
        println!("{label:<12} neighbour {near:.3}  non-neighbour {far:.3}  hinge {hinge:.4}");
    }

    println!("reconstruction error per frame:");
    println!(
        "  full model decoder               {:.4}",
        mean_reconstruction_error(&full, &seq)?
    );
    for (label, p) in [("contrastive", &drlim), ("full", &full)] {
        let dec = fit_pooled_decoder(p, &seq)?;
        println!(
            "  least squares from {label:<12} features {:.4}",
            pooled_reconstruction_error(p, &dec, &seq)?
        );
    }
    Ok(())
}
