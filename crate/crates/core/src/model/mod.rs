//! The two-stage encoder (linear map, rectification, L2 group pooling) with a
//! linear decoder from the hidden units, plus a convolutional counterpart in
//! which every linear operator is a filter bank.

mod conv;
mod fc;
mod topology;

pub use conv::{decode_conv, encode_conv, init_conv_params, ConvActivations, ConvModelParams};
pub use fc::{
    decode_fc, encode_fc, encode_fc_with_norm, init_params, pre_activations, Activations,
    ModelParams,
};
pub use topology::PoolingTopology;

/// Half-wave rectifier used as the encoder nonlinearity.
#[inline]
pub fn rectify(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// `(Σ |v|^p)^(1/p)` over the values yielded by `values`; `p = 2` takes the exact
/// square-root path.
pub(crate) fn p_norm(values: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p == 2.0 {
        values.fold(0.0, |acc, v| acc + v * v).sqrt()
    } else if p == 1.0 {
        values.fold(0.0, |acc, v| acc + v.abs())
    } else {
        values
            .fold(0.0, |acc, v| acc + v.abs().powf(p))
            .powf(1.0 / p)
    }
}
