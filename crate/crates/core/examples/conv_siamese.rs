//! Convolutional variant: filter banks replace the linear maps and pooling
//! also runs over spatial windows. The library's trainer drives the fully
//! connected model, so this example writes the minibatch loop by hand from
//! the same pieces.

use std::path::PathBuf;

use slowpool::data::{generate, normalize, PairSampler, SequenceKind, SequenceSpec};
use slowpool::eval::export_conv_dictionary;
use slowpool::loss::{conv_loss_and_grad, ConvGradients, Hyperparams, LossBreakdown};
use slowpool::model::{encode_conv, init_conv_params};
use slowpool::train::{sgd_step, OptimizerState, ParamBuffers};

fn main() -> slowpool::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "slowpool-out".into()),
    );
    std::fs::create_dir_all(&out)?;
    let seq = normalize(&generate(&SequenceSpec {
        kind: SequenceKind::DriftingTexture,
        frames: 48,
        height: 12,
        width: 12,
        velocity: (0.31, 0.73),
        seed: 4,
        ..Default::default()
    })?);

    // 8 maps of 5x5 filters, groups of 2 maps, 2x2 spatial windows
    let mut params = init_conv_params(8, 5, 5, 2, 2, 2, 0)?;
    let hyper = Hyperparams {
        lr: 1e-4,
        ..Default::default()
    };
    let mut state = OptimizerState::new(&params);
    let mut pairs = PairSampler::new(&seq, 0.5, 0)?;
    let batch = 8;

    for epoch in 0..30 {
        let mut sum = LossBreakdown::default();
        for _ in 0..8 {
            let mut grads = ConvGradients::zeros_like(&params);
            for pair in (&mut pairs).take(batch) {
                let (loss, g) = conv_loss_and_grad(&pair, &params, &hyper)?;
                sum += loss;
                for ((_, acc), (_, gb)) in grads.buffers_mut().into_iter().zip(g.buffers()) {
                    acc.iter_mut()
                        .zip(gb)
                        .for_each(|(a, b)| *a += b / batch as f64);
                }
            }
            sgd_step(&mut params, &grads, &mut state, &hyper)?;
        }
        let mean = sum.scaled(1.0 / 64.0);
        if epoch % 5 == 4 {
            println!(
                "epoch {:>2}: total {:8.3}  recon {:8.3}  slow {:7.3}",
                epoch + 1,
                mean.total,
                mean.recon,
                mean.slowness
            );
        }
    }

    let act = encode_conv(seq.frame(0), &params)?;
    println!(
        "frame 0: {} hidden maps of {}x{}, {} pooled maps of {}x{}",
        act.hidden.len(),
        act.hidden[0].height(),
        act.hidden[0].width(),
        act.pooled.len(),
        act.pooled[0].height(),
        act.pooled[0].width()
    );
    let path = out.join("conv_dictionary.pgm");
    export_conv_dictionary(&params, &path)?;
    println!("decoder filters written to {}", path.display());
    Ok(())
}
