use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{p_norm, rectify, PoolingTopology};
use crate::error::{Error, Result};
use crate::numerics::{dot, Matrix};

/// Fully connected model parameters.
///
/// `enc` is `N × (D+1)`; its last column is the bias, applied to the input in
/// homogeneous coordinates `[x; 1]`. `dec` is `D × N` and reconstructs from the
/// rectified hidden units, not from the pooled features.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    enc: Matrix,
    dec: Matrix,
    topology: PoolingTopology,
}

impl ModelParams {
    pub fn new(enc: Matrix, dec: Matrix, topology: PoolingTopology) -> Result<Self> {
        let n = topology.num_hidden();
        if enc.rows() != n || enc.cols() < 2 {
            return Err(Error::shape(
                "ModelParams::new",
                format!("encoder with {n} rows and at least 2 columns"),
                format!("{}x{}", enc.rows(), enc.cols()),
            ));
        }
        let d = enc.cols() - 1;
        if dec.shape() != (d, n) {
            return Err(Error::shape(
                "ModelParams::new",
                format!("decoder {d}x{n}"),
                format!("{}x{}", dec.rows(), dec.cols()),
            ));
        }
        Ok(Self { enc, dec, topology })
    }

    /// Input dimension `D`.
    pub fn input_dim(&self) -> usize {
        self.enc.cols() - 1
    }

    /// Hidden dimension `N`.
    pub fn num_hidden(&self) -> usize {
        self.enc.rows()
    }

    /// Number of pooled features `K`.
    pub fn num_groups(&self) -> usize {
        self.topology.num_groups()
    }

    pub fn enc(&self) -> &Matrix {
        &self.enc
    }

    pub fn dec(&self) -> &Matrix {
        &self.dec
    }

    pub fn enc_mut(&mut self) -> &mut Matrix {
        &mut self.enc
    }

    pub fn dec_mut(&mut self) -> &mut Matrix {
        &mut self.dec
    }

    pub(crate) fn split_mut(&mut self) -> (&mut Matrix, &mut Matrix) {
        (&mut self.enc, &mut self.dec)
    }

    pub fn topology(&self) -> &PoolingTopology {
        &self.topology
    }

    /// Replaces the decoder, keeping the encoder and topology.
    pub fn with_decoder(mut self, dec: Matrix) -> Result<Self> {
        if dec.shape() != self.dec.shape() {
            return Err(Error::shape(
                "ModelParams::with_decoder",
                format!("{}x{}", self.dec.rows(), self.dec.cols()),
                format!("{}x{}", dec.rows(), dec.cols()),
            ));
        }
        self.dec = dec;
        Ok(self)
    }
}

/// Hidden and pooled activations of the fully connected encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    /// `h = max(0, W_e [x; 1])`, length `N`.
    pub hidden: Vec<f64>,
    /// Group norms `z_i = ‖h‖_{P_i}`, length `K`.
    pub pooled: Vec<f64>,
}

/// Random initialization: weights uniform in `±1/√fan_in` (fan-in `D+1` for the
/// encoder, `N` for the decoder), biases zero, ring topology.
pub fn init_params(
    input_dim: usize,
    num_hidden: usize,
    group_size: usize,
    stride: usize,
    seed: u64,
) -> Result<ModelParams> {
    if input_dim == 0 {
        return Err(Error::InvalidArgument(
            "input dimension must be >= 1".into(),
        ));
    }
    let topology = PoolingTopology::ring(num_hidden, group_size, stride)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let enc_bound = 1.0 / ((input_dim + 1) as f64).sqrt();
    let enc_dist = Uniform::new_inclusive(-enc_bound, enc_bound);
    let mut enc = Matrix::zeros(num_hidden, input_dim + 1);
    for r in 0..num_hidden {
        for c in 0..input_dim {
            enc.set(r, c, enc_dist.sample(&mut rng));
        }
    }

    let dec_bound = 1.0 / (num_hidden as f64).sqrt();
    let dec_dist = Uniform::new_inclusive(-dec_bound, dec_bound);
    let mut dec = Matrix::zeros(input_dim, num_hidden);
    dec.as_mut_slice()
        .iter_mut()
        .for_each(|v| *v = dec_dist.sample(&mut rng));

    ModelParams::new(enc, dec, topology)
}

fn check_input(op: &'static str, x: &[f64], params: &ModelParams) -> Result<()> {
    if x.len() != params.input_dim() {
        return Err(Error::shape(
            op,
            format!("input of length {}", params.input_dim()),
            format!("length {}", x.len()),
        ));
    }
    Ok(())
}

/// `W_e [x; 1]` before rectification.
pub fn pre_activations(x: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    check_input("pre_activations", x, params)?;
    let d = params.input_dim();
    Ok((0..params.num_hidden())
        .map(|r| {
            let row = params.enc.row(r);
            dot(&row[..d], x) + row[d]
        })
        .collect())
}

/// Encodes one input with L2 group pooling.
pub fn encode_fc(x: &[f64], params: &ModelParams) -> Result<Activations> {
    encode_fc_with_norm(x, params, 2.0)
}

/// Encodes one input pooling with an arbitrary `p ≥ 1` group norm.
pub fn encode_fc_with_norm(x: &[f64], params: &ModelParams, p: f64) -> Result<Activations> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "pooling norm order must be >= 1, got {p}"
        )));
    }
    let hidden: Vec<f64> = pre_activations(x, params)?
        .into_iter()
        .map(rectify)
        .collect();
    let pooled = params
        .topology
        .groups()
        .iter()
        .map(|g| p_norm(g.iter().map(|&j| hidden[j]), p))
        .collect();
    Ok(Activations { hidden, pooled })
}

/// `x̂ = W_d h`.
pub fn decode_fc(hidden: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    if hidden.len() != params.num_hidden() {
        return Err(Error::shape(
            "decode_fc",
            format!("hidden vector of length {}", params.num_hidden()),
            format!("length {}", hidden.len()),
        ));
    }
    params.dec.matvec(hidden)
}
