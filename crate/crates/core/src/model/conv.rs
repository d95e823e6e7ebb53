use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{rectify, PoolingTopology};
use crate::error::{Error, Result};
use crate::numerics::{conv2d_transposed, conv2d_valid, Image};

/// Convolutional model: `N` encoder filters with biases, `N` decoder filters,
/// pool groups running across feature maps and non-overlapping
/// `spatial_pool × spatial_pool` windows within each map.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvModelParams {
    enc_kernels: Vec<Image>,
    enc_biases: Vec<f64>,
    dec_kernels: Vec<Image>,
    topology: PoolingTopology,
    spatial_pool: usize,
}

impl ConvModelParams {
    pub fn new(
        enc_kernels: Vec<Image>,
        enc_biases: Vec<f64>,
        dec_kernels: Vec<Image>,
        topology: PoolingTopology,
        spatial_pool: usize,
    ) -> Result<Self> {
        let n = topology.num_hidden();
        if enc_kernels.len() != n || enc_biases.len() != n || dec_kernels.len() != n {
            return Err(Error::shape(
                "ConvModelParams::new",
                format!("{n} encoder kernels, biases and decoder kernels"),
                format!(
                    "{}, {} and {}",
                    enc_kernels.len(),
                    enc_biases.len(),
                    dec_kernels.len()
                ),
            ));
        }
        let dims = enc_kernels[0].dims();
        if dims.0 == 0 || dims.1 == 0 {
            return Err(Error::InvalidArgument("kernels must be non-empty".into()));
        }
        if let Some(k) = enc_kernels
            .iter()
            .chain(&dec_kernels)
            .find(|k| k.dims() != dims)
        {
            return Err(Error::shape(
                "ConvModelParams::new",
                format!("all kernels {}x{}", dims.0, dims.1),
                format!("{}x{}", k.height(), k.width()),
            ));
        }
        if spatial_pool == 0 {
            return Err(Error::InvalidArgument("spatial_pool must be >= 1".into()));
        }
        Ok(Self {
            enc_kernels,
            enc_biases,
            dec_kernels,
            topology,
            spatial_pool,
        })
    }

    pub fn num_maps(&self) -> usize {
        self.enc_kernels.len()
    }

    pub fn kernel_dims(&self) -> (usize, usize) {
        self.enc_kernels[0].dims()
    }

    pub fn enc_kernels(&self) -> &[Image] {
        &self.enc_kernels
    }

    pub fn enc_biases(&self) -> &[f64] {
        &self.enc_biases
    }

    pub fn dec_kernels(&self) -> &[Image] {
        &self.dec_kernels
    }

    pub fn enc_kernels_mut(&mut self) -> &mut [Image] {
        &mut self.enc_kernels
    }

    pub fn enc_biases_mut(&mut self) -> &mut [f64] {
        &mut self.enc_biases
    }

    pub fn dec_kernels_mut(&mut self) -> &mut [Image] {
        &mut self.dec_kernels
    }

    pub(crate) fn split_buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut out: Vec<(&'static str, &mut [f64])> = self
            .enc_kernels
            .iter_mut()
            .map(|k| ("enc_kernels", k.as_mut_slice()))
            .collect();
        out.push(("enc_biases", &mut self.enc_biases));
        out.extend(
            self.dec_kernels
                .iter_mut()
                .map(|k| ("dec_kernels", k.as_mut_slice())),
        );
        out
    }

    pub fn topology(&self) -> &PoolingTopology {
        &self.topology
    }

    pub fn spatial_pool(&self) -> usize {
        self.spatial_pool
    }
}

/// Per-map hidden activations and per-group pooled maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvActivations {
    pub hidden: Vec<Image>,
    pub pooled: Vec<Image>,
}

/// Same initialization scheme as the fully connected model, with fan-in
/// `kH·kW + 1` for encoder filters and `N` for decoder filters.
pub fn init_conv_params(
    num_maps: usize,
    kernel_h: usize,
    kernel_w: usize,
    group_size: usize,
    stride: usize,
    spatial_pool: usize,
    seed: u64,
) -> Result<ConvModelParams> {
    if kernel_h == 0 || kernel_w == 0 {
        return Err(Error::InvalidArgument("kernel dims must be >= 1".into()));
    }
    let topology = PoolingTopology::ring(num_maps, group_size, stride)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eb = 1.0 / ((kernel_h * kernel_w + 1) as f64).sqrt();
    let enc_dist = Uniform::new_inclusive(-eb, eb);
    let enc_kernels = (0..num_maps)
        .map(|_| Image::from_fn(kernel_h, kernel_w, |_, _| enc_dist.sample(&mut rng)))
        .collect();
    let db = 1.0 / (num_maps as f64).sqrt();
    let dec_dist = Uniform::new_inclusive(-db, db);
    let dec_kernels = (0..num_maps)
        .map(|_| Image::from_fn(kernel_h, kernel_w, |_, _| dec_dist.sample(&mut rng)))
        .collect();
    ConvModelParams::new(
        enc_kernels,
        vec![0.0; num_maps],
        dec_kernels,
        topology,
        spatial_pool,
    )
}

/// Group norm over maps `P_i` jointly with each spatial window; ragged edges are dropped.
pub(crate) fn pool_maps(hidden: &[Image], topology: &PoolingTopology, s: usize) -> Vec<Image> {
    let (hh, hw) = hidden[0].dims();
    let (ph, pw) = (hh / s, hw / s);
    topology
        .groups()
        .iter()
        .map(|g| {
            Image::from_fn(ph, pw, |r, c| {
                let mut acc = 0.0;
                for &j in g {
                    for y in r * s..(r + 1) * s {
                        for x in c * s..(c + 1) * s {
                            let v = hidden[j].get(y, x);
                            acc += v * v;
                        }
                    }
                }
                acc.sqrt()
            })
        })
        .collect()
}

pub fn encode_conv(img: &Image, params: &ConvModelParams) -> Result<ConvActivations> {
    let (kh, kw) = params.kernel_dims();
    if img.height() < kh || img.width() < kw {
        return Err(Error::shape(
            "encode_conv",
            format!("image at least {kh}x{kw}"),
            format!("{}x{}", img.height(), img.width()),
        ));
    }
    let s = params.spatial_pool;
    let (hh, hw) = (img.height() - kh + 1, img.width() - kw + 1);
    if hh < s || hw < s {
        return Err(Error::shape(
            "encode_conv",
            format!("feature maps at least {s}x{s} for spatial pooling"),
            format!("{hh}x{hw}"),
        ));
    }
    let hidden = params
        .enc_kernels
        .iter()
        .zip(&params.enc_biases)
        .map(|(k, &b)| {
            let mut map = conv2d_valid(img, k)?;
            map.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = rectify(*v + b));
            Ok(map)
        })
        .collect::<Result<Vec<_>>>()?;
    let pooled = pool_maps(&hidden, &params.topology, s);
    Ok(ConvActivations { hidden, pooled })
}

/// `x̂ = Σ_n conv2d_transposed(h_n, dec_n)`.
pub fn decode_conv(activations: &ConvActivations, params: &ConvModelParams) -> Result<Image> {
    let hidden = &activations.hidden;
    if hidden.len() != params.num_maps() {
        return Err(Error::shape(
            "decode_conv",
            format!("{} hidden maps", params.num_maps()),
            format!("{}", hidden.len()),
        ));
    }
    let dims = hidden[0].dims();
    if let Some(m) = hidden.iter().find(|m| m.dims() != dims) {
        return Err(Error::shape(
            "decode_conv",
            format!("hidden maps {}x{}", dims.0, dims.1),
            format!("{}x{}", m.height(), m.width()),
        ));
    }
    let (kh, kw) = params.kernel_dims();
    let mut out = Image::zeros(dims.0 + kh - 1, dims.1 + kw - 1);
    for (h, k) in hidden.iter().zip(&params.dec_kernels) {
        out.add_assign(&conv2d_transposed(h, k));
    }
    Ok(out)
}
