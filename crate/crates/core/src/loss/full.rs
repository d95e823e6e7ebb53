use super::{feature_distance, sign, FramePair, Hyperparams, LossBreakdown};
use crate::error::{Error, Result};
use crate::model::{p_norm, rectify, ModelParams};
use crate::numerics::Matrix;

/// `∂L/∂W_e` and `∂L/∂W_d`, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub d_enc: Matrix,
    pub d_dec: Matrix,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self {
            d_enc: Matrix::zeros(params.enc().rows(), params.enc().cols()),
            d_dec: Matrix::zeros(params.dec().rows(), params.dec().cols()),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        self.d_enc.add_assign(&other.d_enc);
        self.d_dec.add_assign(&other.d_dec);
    }

    pub fn scale(&mut self, s: f64) {
        self.d_enc.scale(s);
        self.d_dec.scale(s);
    }
}

/// One Siamese branch: homogeneous input, pre-activations, hidden units, pooled features.
pub(super) struct Branch {
    pub xh: Vec<f64>,
    pub pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub pooled: Vec<f64>,
}

pub(super) fn forward(x: &[f64], params: &ModelParams, p: f64) -> Result<Branch> {
    let pre = crate::model::pre_activations(x, params)?;
    let hidden: Vec<f64> = pre.iter().map(|&v| rectify(v)).collect();
    let pooled = params
        .topology()
        .groups()
        .iter()
        .map(|g| p_norm(g.iter().map(|&j| hidden[j]), p))
        .collect();
    let mut xh = Vec::with_capacity(x.len() + 1);
    xh.extend_from_slice(x);
    xh.push(1.0);
    Ok(Branch {
        xh,
        pre,
        hidden,
        pooled,
    })
}

fn check_pair(pair: &FramePair, params: &ModelParams) -> Result<()> {
    let d = params.input_dim();
    if pair.a.len() != d {
        return Err(Error::shape(
            "full_loss",
            format!("frames with {d} pixels"),
            format!("{} pixels", pair.a.len()),
        ));
    }
    Ok(())
}

/// Residual `W_d h − x`.
fn residual(branch: &Branch, x: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    let mut r = params.dec().matvec(&branch.hidden)?;
    r.iter_mut().zip(x).for_each(|(r, x)| *r -= x);
    Ok(r)
}

fn breakdown(a: &Branch, b: &Branch, ra: &[f64], rb: &[f64], hyper: &Hyperparams) -> LossBreakdown {
    let sq = |r: &[f64]| r.iter().fold(0.0, |acc, v| acc + v * v);
    let l1 = |h: &[f64]| h.iter().fold(0.0, |acc, v| acc + v.abs());
    let recon = sq(ra) + sq(rb);
    let sparsity = hyper.alpha * (l1(&a.hidden) + l1(&b.hidden));
    let slowness = hyper.beta
        * a.pooled
            .iter()
            .zip(&b.pooled)
            .fold(0.0, |acc, (za, zb)| acc + (za - zb).abs());
    LossBreakdown {
        recon,
        sparsity,
        slowness,
        contrastive: 0.0,
        total: recon + sparsity + slowness,
    }
}

/// Evaluates the full objective on one pair.
pub fn full_loss(
    pair: &FramePair,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<LossBreakdown> {
    check_pair(pair, params)?;
    let (xa, xb) = (pair.a.as_slice(), pair.b.as_slice());
    let a = forward(xa, params, hyper.p)?;
    let b = forward(xb, params, hyper.p)?;
    let ra = residual(&a, xa, params)?;
    let rb = residual(&b, xb, params)?;
    Ok(breakdown(&a, &b, &ra, &rb, hyper))
}

/// Backpropagates `dz` (pooled) and `dh` (hidden) through the pooling, the
/// rectifier gate and the encoder of one branch, accumulating into `d_enc`.
pub(super) fn backprop_encoder(
    branch: &Branch,
    mut dh: Vec<f64>,
    dz: &[f64],
    params: &ModelParams,
    eps: f64,
    d_enc: &mut Matrix,
) {
    let topo = params.topology();
    for (i, &g) in dz.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let denom = branch.pooled[i].max(eps);
        for &j in topo.group(i) {
            dh[j] += g * branch.hidden[j] / denom;
        }
    }
    // gradient passes only where the pre-activation is positive
    for (d, &pre) in dh.iter_mut().zip(&branch.pre) {
        if pre <= 0.0 {
            *d = 0.0;
        }
    }
    d_enc.add_outer(1.0, &dh, &branch.xh);
}

/// Loss, gradient and the number of exactly-zero hidden units over both branches.
pub(crate) struct PairOutcome {
    pub loss: LossBreakdown,
    pub grads: Gradients,
    pub zero_hidden: usize,
}

fn zero_count(a: &Branch, b: &Branch) -> usize {
    a.hidden
        .iter()
        .chain(&b.hidden)
        .filter(|&&h| h == 0.0)
        .count()
}

/// Loss and analytic gradient of the full objective, summed over both branches.
pub fn loss_and_grad(
    pair: &FramePair,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<(LossBreakdown, Gradients)> {
    full_step(pair, params, hyper).map(|o| (o.loss, o.grads))
}

pub(crate) fn full_step(
    pair: &FramePair,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<PairOutcome> {
    hyper.require_p2("backward")?;
    check_pair(pair, params)?;
    let (xa, xb) = (pair.a.as_slice(), pair.b.as_slice());
    let a = forward(xa, params, 2.0)?;
    let b = forward(xb, params, 2.0)?;
    let ra = residual(&a, xa, params)?;
    let rb = residual(&b, xb, params)?;
    let loss = breakdown(&a, &b, &ra, &rb, hyper);

    let mut grads = Gradients::zeros_like(params);
    let slow_sign: Vec<f64> = a
        .pooled
        .iter()
        .zip(&b.pooled)
        .map(|(za, zb)| hyper.beta * sign(za - zb))
        .collect();
    let neg_sign: Vec<f64> = slow_sign.iter().map(|s| -s).collect();

    for (branch, r, dz) in [(&a, &ra, &slow_sign), (&b, &rb, &neg_sign)] {
        // ∂‖W_d h − x‖²/∂W_d = 2 r hᵀ ; ∂/∂h = 2 W_dᵀ r
        grads.d_dec.add_outer(2.0, r, &branch.hidden);
        let mut dh = params.dec().matvec_transposed(r)?;
        for (d, &h) in dh.iter_mut().zip(&branch.hidden) {
            *d = 2.0 * *d + hyper.alpha * sign(h);
        }
        backprop_encoder(branch, dh, dz, params, hyper.eps, &mut grads.d_enc);
    }
    Ok(PairOutcome {
        loss,
        grads,
        zero_hidden: zero_count(&a, &b),
    })
}

/// Analytic gradient of the full objective. Only `p = 2` is supported.
pub fn backward(pair: &FramePair, params: &ModelParams, hyper: &Hyperparams) -> Result<Gradients> {
    loss_and_grad(pair, params, hyper).map(|(_, g)| g)
}

/// Contrastive baseline on pooled features with its encoder gradient. The
/// decoder gradient is identically zero.
pub fn drlim_loss_and_grad(
    pair: &FramePair,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<(LossBreakdown, Gradients)> {
    drlim_step(pair, params, hyper).map(|o| (o.loss, o.grads))
}

pub(crate) fn drlim_step(
    pair: &FramePair,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<PairOutcome> {
    hyper.require_p2("drlim backward")?;
    check_pair(pair, params)?;
    let a = forward(pair.a.as_slice(), params, 2.0)?;
    let b = forward(pair.b.as_slice(), params, 2.0)?;
    let dist = feature_distance(&a.pooled, &b.pooled, 2.0);

    // dL/d‖z_a − z_b‖
    let (loss, outer) = if pair.is_neighbor() {
        (
            LossBreakdown {
                slowness: dist,
                total: dist,
                ..Default::default()
            },
            1.0,
        )
    } else {
        let hinge = (hyper.margin - dist).max(0.0);
        let active = if hinge > 0.0 { -1.0 } else { 0.0 };
        (
            LossBreakdown {
                contrastive: hinge,
                total: hinge,
                ..Default::default()
            },
            active,
        )
    };

    let mut grads = Gradients::zeros_like(params);
    if outer != 0.0 && dist > 0.0 {
        let scale = outer / dist.max(hyper.eps);
        let dz_a: Vec<f64> = a
            .pooled
            .iter()
            .zip(&b.pooled)
            .map(|(za, zb)| scale * (za - zb))
            .collect();
        let dz_b: Vec<f64> = dz_a.iter().map(|v| -v).collect();
        let n = params.num_hidden();
        backprop_encoder(&a, vec![0.0; n], &dz_a, params, hyper.eps, &mut grads.d_enc);
        backprop_encoder(&b, vec![0.0; n], &dz_b, params, hyper.eps, &mut grads.d_enc);
    }
    Ok(PairOutcome {
        loss,
        grads,
        zero_hidden: zero_count(&a, &b),
    })
}
