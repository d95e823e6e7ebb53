use super::{sign, FramePair, Hyperparams, LossBreakdown};
use crate::error::Result;
use crate::model::{decode_conv, encode_conv, ConvActivations, ConvModelParams};
use crate::numerics::{conv2d_valid, Image};

/// Gradients of the convolutional objective, shaped like [`ConvModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGradients {
    pub d_enc_kernels: Vec<Image>,
    pub d_enc_biases: Vec<f64>,
    pub d_dec_kernels: Vec<Image>,
}

impl ConvGradients {
    pub fn zeros_like(params: &ConvModelParams) -> Self {
        let (kh, kw) = params.kernel_dims();
        let n = params.num_maps();
        Self {
            d_enc_kernels: vec![Image::zeros(kh, kw); n],
            d_enc_biases: vec![0.0; n],
            d_dec_kernels: vec![Image::zeros(kh, kw); n],
        }
    }
}

struct ConvBranch<'a> {
    x: &'a Image,
    act: ConvActivations,
    residual: Image,
}

fn forward<'a>(x: &'a Image, params: &ConvModelParams) -> Result<ConvBranch<'a>> {
    let act = encode_conv(x, params)?;
    let mut residual = decode_conv(&act, params)?;
    residual
        .as_mut_slice()
        .iter_mut()
        .zip(x.as_slice())
        .for_each(|(r, x)| *r -= x);
    Ok(ConvBranch { x, act, residual })
}

fn breakdown(a: &ConvBranch, b: &ConvBranch, hyper: &Hyperparams) -> LossBreakdown {
    let sq = |m: &Image| m.as_slice().iter().fold(0.0, |acc, v| acc + v * v);
    let l1 = |maps: &[Image]| {
        maps.iter()
            .flat_map(|m| m.as_slice())
            .fold(0.0, |acc, v| acc + v.abs())
    };
    let recon = sq(&a.residual) + sq(&b.residual);
    let sparsity = hyper.alpha * (l1(&a.act.hidden) + l1(&b.act.hidden));
    let diff: f64 = a
        .act
        .pooled
        .iter()
        .zip(&b.act.pooled)
        .flat_map(|(za, zb)| za.as_slice().iter().zip(zb.as_slice()))
        .fold(0.0, |acc, (u, v)| acc + (u - v).abs());
    let slowness = hyper.beta * diff;
    LossBreakdown {
        recon,
        sparsity,
        slowness,
        contrastive: 0.0,
        total: recon + sparsity + slowness,
    }
}

/// Full objective for the convolutional model on one pair of frames.
pub fn conv_full_loss(
    pair: &FramePair,
    params: &ConvModelParams,
    hyper: &Hyperparams,
) -> Result<LossBreakdown> {
    let a = forward(&pair.a, params)?;
    let b = forward(&pair.b, params)?;
    Ok(breakdown(&a, &b, hyper))
}

pub fn conv_loss_and_grad(
    pair: &FramePair,
    params: &ConvModelParams,
    hyper: &Hyperparams,
) -> Result<(LossBreakdown, ConvGradients)> {
    hyper.require_p2("conv backward")?;
    let a = forward(&pair.a, params)?;
    let b = forward(&pair.b, params)?;
    let loss = breakdown(&a, &b, hyper);

    let mut grads = ConvGradients::zeros_like(params);
    let s = params.spatial_pool();
    let topo = params.topology();

    for (branch, other) in [(&a, &b), (&b, &a)] {
        let hidden = &branch.act.hidden;
        let mut e = branch.residual.clone();
        e.as_mut_slice().iter_mut().for_each(|v| *v *= 2.0);

        let mut dh = Vec::with_capacity(hidden.len());
        for (n, h) in hidden.iter().enumerate() {
            grads.d_dec_kernels[n].add_assign(&conv2d_valid(&e, h)?);
            let mut d = conv2d_valid(&e, &params.dec_kernels()[n])?;
            for (dv, &hv) in d.as_mut_slice().iter_mut().zip(h.as_slice()) {
                *dv += hyper.alpha * sign(hv);
            }
            dh.push(d);
        }

        if hyper.beta > 0.0 {
            for (i, group) in topo.groups().iter().enumerate() {
                let (z, zo) = (&branch.act.pooled[i], &other.act.pooled[i]);
                for r in 0..z.height() {
                    for c in 0..z.width() {
                        let g = hyper.beta * sign(z.get(r, c) - zo.get(r, c));
                        if g == 0.0 {
                            continue;
                        }
                        let k = g / z.get(r, c).max(hyper.eps);
                        for &j in group {
                            for y in r * s..(r + 1) * s {
                                for x in c * s..(c + 1) * s {
                                    let v = dh[j].get(y, x) + k * hidden[j].get(y, x);
                                    dh[j].set(y, x, v);
                                }
                            }
                        }
                    }
                }
            }
        }

        for (n, (mut d, h)) in dh.into_iter().zip(hidden).enumerate() {
            for (dv, &hv) in d.as_mut_slice().iter_mut().zip(h.as_slice()) {
                if hv <= 0.0 {
                    *dv = 0.0;
                }
            }
            grads.d_enc_kernels[n].add_assign(&conv2d_valid(branch.x, &d)?);
            grads.d_enc_biases[n] += d.as_slice().iter().sum::<f64>();
        }
    }
    Ok((loss, grads))
}

pub fn conv_backward(
    pair: &FramePair,
    params: &ConvModelParams,
    hyper: &Hyperparams,
) -> Result<ConvGradients> {
    conv_loss_and_grad(pair, params, hyper).map(|(_, g)| g)
}
