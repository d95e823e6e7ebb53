//! Central finite-difference verification of the analytic gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::full::{forward, loss_and_grad};
use super::{full_loss, FramePair, Hyperparams};
use crate::error::Result;
use crate::model::{init_params, ModelParams};
use crate::numerics::Image;

/// Magnitudes below this are compared absolutely rather than relatively.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

/// Outcome of [`grad_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Buffer and flat index of the worst coordinate.
    pub worst: Option<(&'static str, usize)>,
    pub checked: usize,
    /// Coordinates skipped because a perturbation could cross a kink.
    pub excluded: usize,
}

impl GradCheckReport {
    pub fn total(&self) -> usize {
        self.checked + self.excluded
    }

    pub fn excluded_fraction(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.excluded as f64 / self.total() as f64
        }
    }
}

/// `|a − n| / max(|a|, |n|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Compares [`super::backward`] with central differences of [`full_loss`] over
/// every encoder and decoder coordinate.
///
/// Encoder rows of units whose pre-activation lies within `10·step` of zero in
/// either branch are excluded, as are the rows of every unit in an active group
/// whose pooled difference lies within `10·step` of zero. Decoder coordinates never
/// move a kink and are always checked.
pub fn grad_check(
    params: &ModelParams,
    pair: &FramePair,
    hyper: &Hyperparams,
    step: f64,
) -> Result<GradCheckReport> {
    let (_, grads) = loss_and_grad(pair, params, hyper)?;
    let a = forward(pair.a.as_slice(), params, 2.0)?;
    let b = forward(pair.b.as_slice(), params, 2.0)?;

    let band = 10.0 * step;
    let n = params.num_hidden();
    let mut near_kink = vec![false; n];
    for j in 0..n {
        near_kink[j] = a.pre[j].abs() < band || b.pre[j].abs() < band;
    }
    if hyper.beta > 0.0 {
        for (i, g) in params.topology().groups().iter().enumerate() {
            // a group silent in both frames stays silent unless one of its
            // units is already near its own kink
            let active = a.pooled[i] > 0.0 || b.pooled[i] > 0.0;
            if active && (a.pooled[i] - b.pooled[i]).abs() < band {
                g.iter().for_each(|&j| near_kink[j] = true);
            }
        }
    }

    let eval = |p: &ModelParams| full_loss(pair, p, hyper).map(|l| l.total);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        excluded: 0,
    };
    let mut probe = params.clone();
    let enc_cols = params.enc().cols();

    for (name, analytic) in [
        ("enc", grads.d_enc.as_slice()),
        ("dec", grads.d_dec.as_slice()),
    ] {
        for (idx, &an) in analytic.iter().enumerate() {
            if name == "enc" && near_kink[idx / enc_cols] {
                report.excluded += 1;
                continue;
            }
            let base = *coordinate(&mut probe, name, idx);
            *coordinate(&mut probe, name, idx) = base + step;
            let plus = eval(&probe)?;
            *coordinate(&mut probe, name, idx) = base - step;
            let minus = eval(&probe)?;
            *coordinate(&mut probe, name, idx) = base;

            let err = relative_error(an, (plus - minus) / (2.0 * step));
            report.checked += 1;
            if report.worst.is_none() || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((name, idx));
            }
        }
    }
    Ok(report)
}

fn coordinate<'a>(p: &'a mut ModelParams, buffer: &str, idx: usize) -> &'a mut f64 {
    if buffer == "enc" {
        &mut p.enc_mut().as_mut_slice()[idx]
    } else {
        &mut p.dec_mut().as_mut_slice()[idx]
    }
}

/// A random model and neighbour pair for gradient checking: initialized
/// weights with biases drawn from `[-0.5, 0.5]` and frames from `[-1, 1]`.
pub fn random_instance(
    input_dim: usize,
    num_hidden: usize,
    group_size: usize,
    stride: usize,
    seed: u64,
) -> Result<(ModelParams, FramePair)> {
    let mut params = init_params(input_dim, num_hidden, group_size, stride, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    for r in 0..num_hidden {
        params.enc_mut().set(r, input_dim, rng.gen_range(-0.5..0.5));
    }
    let mut frame = || Image::from_fn(1, input_dim, |_, _| rng.gen_range(-1.0..1.0));
    let pair = FramePair::new(frame(), frame(), 1)?;
    Ok((params, pair))
}
