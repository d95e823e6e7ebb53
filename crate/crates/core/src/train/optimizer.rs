//! SGD with classical momentum over named flat parameter buffers.

use crate::error::{Error, Result};
use crate::loss::{ConvGradients, Gradients, Hyperparams};
use crate::model::{ConvModelParams, ModelParams};

/// A value viewed as an ordered list of named flat `f64` buffers. Parameters
/// and their gradients expose the same layout.
pub trait ParamBuffers {
    fn buffers(&self) -> Vec<(&'static str, &[f64])>;
    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])>;
}

impl ParamBuffers for ModelParams {
    fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("enc", self.enc().as_slice()),
            ("dec", self.dec().as_slice()),
        ]
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let (enc, dec) = self.split_mut();
        vec![("enc", enc.as_mut_slice()), ("dec", dec.as_mut_slice())]
    }
}

impl ParamBuffers for Gradients {
    fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("enc", self.d_enc.as_slice()),
            ("dec", self.d_dec.as_slice()),
        ]
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("enc", self.d_enc.as_mut_slice()),
            ("dec", self.d_dec.as_mut_slice()),
        ]
    }
}

impl ParamBuffers for ConvGradients {
    fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        let mut out: Vec<(&'static str, &[f64])> = self
            .d_enc_kernels
            .iter()
            .map(|k| ("enc_kernels", k.as_slice()))
            .collect();
        out.push(("enc_biases", &self.d_enc_biases));
        out.extend(
            self.d_dec_kernels
                .iter()
                .map(|k| ("dec_kernels", k.as_slice())),
        );
        out
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut out: Vec<(&'static str, &mut [f64])> = self
            .d_enc_kernels
            .iter_mut()
            .map(|k| ("enc_kernels", k.as_mut_slice()))
            .collect();
        out.push(("enc_biases", &mut self.d_enc_biases));
        out.extend(
            self.d_dec_kernels
                .iter_mut()
                .map(|k| ("dec_kernels", k.as_mut_slice())),
        );
        out
    }
}

impl ParamBuffers for ConvModelParams {
    fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        let mut out: Vec<(&'static str, &[f64])> = self
            .enc_kernels()
            .iter()
            .map(|k| ("enc_kernels", k.as_slice()))
            .collect();
        out.push(("enc_biases", self.enc_biases()));
        out.extend(
            self.dec_kernels()
                .iter()
                .map(|k| ("dec_kernels", k.as_slice())),
        );
        out
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        self.split_buffers_mut()
    }
}

/// Momentum buffers, one per parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    velocity: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(params: &impl ParamBuffers) -> Self {
        Self {
            velocity: params
                .buffers()
                .iter()
                .map(|(_, b)| vec![0.0; b.len()])
                .collect(),
        }
    }

    pub fn velocity(&self) -> &[Vec<f64>] {
        &self.velocity
    }
}

/// `v ← momentum·v − lr·g`, `w ← w + v`.
///
/// The whole step is rejected before any parameter changes if a gradient
/// entry is not finite; the error names the buffer and the flat index of the
/// offending coordinate across all buffers.
pub fn sgd_step<P: ParamBuffers, G: ParamBuffers>(
    params: &mut P,
    grads: &G,
    state: &mut OptimizerState,
    hyper: &Hyperparams,
) -> Result<()> {
    let g = grads.buffers();
    let mut w = params.buffers_mut();
    let shapes_ok = g.len() == w.len()
        && g.len() == state.velocity.len()
        && g.iter()
            .zip(&w)
            .zip(&state.velocity)
            .all(|(((_, g), (_, w)), v)| g.len() == w.len() && v.len() == w.len());
    if !shapes_ok {
        let lens = |b: Vec<usize>| format!("{b:?}");
        return Err(Error::shape(
            "sgd_step",
            lens(w.iter().map(|(_, b)| b.len()).collect()),
            lens(g.iter().map(|(_, b)| b.len()).collect()),
        ));
    }
    let mut flat = 0;
    for (name, buf) in &g {
        if let Some(i) = buf.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                buffer: name,
                index: flat + i,
            });
        }
        flat += buf.len();
    }
    for (((_, g), (_, w)), v) in g.iter().zip(w.iter_mut()).zip(state.velocity.iter_mut()) {
        for ((w, &g), v) in w.iter_mut().zip(g.iter()).zip(v.iter_mut()) {
            *v = hyper.momentum * *v - hyper.lr * g;
            *w += *v;
        }
    }
    Ok(())
}
