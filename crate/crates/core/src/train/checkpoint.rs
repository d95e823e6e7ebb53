//! Checkpoint file: magic `SFAE`, version byte `0x01`, then `D`, `N`, `K`,
//! `group_size`, `stride` as little-endian `u32`, then `α`, `β`, `margin`, `ε`
//! as little-endian `f64`, then the encoder and decoder as row-major
//! little-endian `f32`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::loss::Hyperparams;
use crate::model::{ModelParams, PoolingTopology};
use crate::numerics::Matrix;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SFAE";
pub const CHECKPOINT_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 5 * 4 + 4 * 8;

/// Parameters plus the loss settings they were trained with. Optimizer
/// settings and `p` are not stored and come back as defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub hyper: Hyperparams,
}

pub fn encode_checkpoint(params: &ModelParams, hyper: &Hyperparams) -> Vec<u8> {
    let topo = params.topology();
    let mut out = Vec::with_capacity(
        HEADER_LEN + 4 * (params.enc().as_slice().len() + params.dec().as_slice().len()),
    );
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.push(CHECKPOINT_VERSION);
    for v in [
        params.input_dim(),
        params.num_hidden(),
        params.num_groups(),
        topo.group_size(),
        topo.stride(),
    ] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in [hyper.alpha, hyper.beta, hyper.margin, hyper.eps] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &v in params
        .enc()
        .as_slice()
        .iter()
        .chain(params.dec().as_slice())
    {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 5 {
        return Err(Error::format(
            bytes.len() as u64,
            "file too short for magic and version",
        ));
    }
    if &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::format(0, "bad magic, not a checkpoint"));
    }
    if bytes[4] != CHECKPOINT_VERSION {
        return Err(Error::Version { found: bytes[4] });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(bytes.len() as u64, "truncated header"));
    }
    let u = |i: usize| u32::from_le_bytes(bytes[5 + 4 * i..9 + 4 * i].try_into().unwrap()) as usize;
    let f = |i: usize| f64::from_le_bytes(bytes[25 + 8 * i..33 + 8 * i].try_into().unwrap());
    let (d, n, k, group_size, stride) = (u(0), u(1), u(2), u(3), u(4));
    let hyper = Hyperparams {
        alpha: f(0),
        beta: f(1),
        margin: f(2),
        eps: f(3),
        ..Hyperparams::default()
    };

    let values = (n as u64) * (d as u64 + 1) + (d as u64) * (n as u64);
    let expected = HEADER_LEN as u64 + 4 * values;
    if bytes.len() as u64 != expected {
        return Err(Error::format(
            (bytes.len() as u64).min(expected),
            format!("file is {} bytes, header implies {expected}", bytes.len()),
        ));
    }
    let topology = PoolingTopology::ring(n, group_size, stride)
        .map_err(|e| Error::format(5, format!("bad pooling header: {e}")))?;
    if topology.num_groups() != k {
        return Err(Error::format(
            13,
            format!(
                "header says K={k} but N={n}, group_size={group_size}, stride={stride} gives {}",
                topology.num_groups()
            ),
        ));
    }
    if hyper.validate().is_err() {
        return Err(Error::format(25, "hyperparameters out of range"));
    }

    let mut offset = HEADER_LEN;
    let mut read = |count: usize| -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(count);
        for _ in 0..count {
            let x = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
            if !x.is_finite() {
                return Err(Error::format(offset as u64, "non-finite weight"));
            }
            v.push(x as f64);
            offset += 4;
        }
        Ok(v)
    };
    let enc = Matrix::from_vec(n, d + 1, read(n * (d + 1))?)?;
    let dec = Matrix::from_vec(d, n, read(d * n)?)?;
    Ok(Checkpoint {
        params: ModelParams::new(enc, dec, topology)?,
        hyper,
    })
}

pub fn save_checkpoint(
    params: &ModelParams,
    hyper: &Hyperparams,
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, encode_checkpoint(params, hyper))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    decode_checkpoint(&fs::read(path)?)
}
