use nalgebra::DMatrix;

use crate::data::FrameSequence;
use crate::error::{Error, Result};
use crate::model::{decode_fc, encode_fc, ModelParams};
use crate::numerics::Matrix;

/// Mean over frames of `‖W_d h − x‖²`.
pub fn mean_reconstruction_error(params: &ModelParams, seq: &FrameSequence) -> Result<f64> {
    let mut total = 0.0;
    for f in seq.frames() {
        let x = f.as_slice();
        let h = encode_fc(x, params)?.hidden;
        let xh = decode_fc(&h, params)?;
        total += xh
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(total / seq.len() as f64)
}

/// Minimum-norm least-squares `B` with `features · B ≈ targets`, row per sample.
fn least_squares(features: &[Vec<f64>], targets: &[&[f64]]) -> Result<DMatrix<f64>> {
    let (t, k, d) = (features.len(), features[0].len(), targets[0].len());
    let a = DMatrix::from_fn(t, k, |r, c| features[r][c]);
    let x = DMatrix::from_fn(t, d, |r, c| targets[r][c]);
    let svd = a.svd(true, true);
    let tol = 1e-10 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    svd.solve(&x, tol)
        .map_err(|e| Error::InvalidArgument(format!("least-squares fit failed: {e}")))
}

fn check_frames(op: &'static str, params: &ModelParams, seq: &FrameSequence) -> Result<()> {
    if seq.frame_len() != params.input_dim() {
        return Err(Error::shape(
            op,
            format!("frames with {} pixels", params.input_dim()),
            format!("{} pixels", seq.frame_len()),
        ));
    }
    Ok(())
}

fn transposed(b: &DMatrix<f64>) -> Matrix {
    let mut m = Matrix::zeros(b.ncols(), b.nrows());
    for i in 0..b.ncols() {
        for j in 0..b.nrows() {
            m.set(i, j, b[(j, i)]);
        }
    }
    m
}

/// Replaces the decoder with the minimum-norm least-squares fit of the frames
/// of `seq` from their hidden activations, keeping the encoder fixed.
pub fn fit_decoder_least_squares(params: &ModelParams, seq: &FrameSequence) -> Result<ModelParams> {
    check_frames("fit_decoder_least_squares", params, seq)?;
    let hidden = seq
        .frames()
        .iter()
        .map(|f| encode_fc(f.as_slice(), params).map(|a| a.hidden))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<&[f64]> = seq.frames().iter().map(|f| f.as_slice()).collect();
    params
        .clone()
        .with_decoder(transposed(&least_squares(&hidden, &targets)?))
}

/// Linear map from pooled features back to pixels, `D × K`.
pub fn fit_pooled_decoder(params: &ModelParams, seq: &FrameSequence) -> Result<Matrix> {
    check_frames("fit_pooled_decoder", params, seq)?;
    let pooled = seq
        .frames()
        .iter()
        .map(|f| encode_fc(f.as_slice(), params).map(|a| a.pooled))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<&[f64]> = seq.frames().iter().map(|f| f.as_slice()).collect();
    Ok(transposed(&least_squares(&pooled, &targets)?))
}

/// Mean over frames of `‖A z − x‖²` for a decoder `A` from [`fit_pooled_decoder`].
pub fn pooled_reconstruction_error(
    params: &ModelParams,
    decoder: &Matrix,
    seq: &FrameSequence,
) -> Result<f64> {
    let mut total = 0.0;
    for f in seq.frames() {
        let x = f.as_slice();
        let xh = decoder.matvec(&encode_fc(x, params)?.pooled)?;
        total += xh
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(total / seq.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, normalize, SequenceSpec};
    use crate::model::{init_params, PoolingTopology};
    use crate::numerics::Image;

    #[test]
    fn identity_encoder_is_fitted_exactly() {
        // encoder passes positive inputs through unchanged, so W_d = I reconstructs
        let mut enc = Matrix::zeros(3, 4);
        for i in 0..3 {
            enc.set(i, i, 1.0);
        }
        let topo = PoolingTopology::ring(3, 1, 1).unwrap();
        let p = ModelParams::new(enc, Matrix::zeros(3, 3), topo).unwrap();
        let frames = [
            [1.0, 2.0, 0.5],
            [0.3, 0.1, 4.0],
            [2.0, 2.0, 2.0],
            [0.7, 1.5, 0.2],
        ];
        let seq = FrameSequence::new(
            frames
                .iter()
                .map(|f| Image::from_vec(1, 3, f.to_vec()).unwrap())
                .collect(),
        )
        .unwrap();
        let fitted = fit_decoder_least_squares(&p, &seq).unwrap();
        assert!(mean_reconstruction_error(&fitted, &seq).unwrap() < 1e-20);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((fitted.dec().get(i, j) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pooled_fit_with_singleton_groups_matches_hidden_fit() {
        // with one unit per group, z = h and both fits solve the same problem
        let seq = normalize(
            &generate(&SequenceSpec {
                frames: 20,
                height: 3,
                width: 3,
                ..Default::default()
            })
            .unwrap(),
        );
        let p = init_params(9, 6, 1, 1, 2).unwrap();
        let a =
            mean_reconstruction_error(&fit_decoder_least_squares(&p, &seq).unwrap(), &seq).unwrap();
        let dec = fit_pooled_decoder(&p, &seq).unwrap();
        assert_eq!(dec.shape(), (9, 6));
        let b = pooled_reconstruction_error(&p, &dec, &seq).unwrap();
        assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn fit_never_loses_to_the_current_decoder() {
        let seq = normalize(
            &generate(&SequenceSpec {
                frames: 20,
                height: 4,
                width: 4,
                ..Default::default()
            })
            .unwrap(),
        );
        let p = init_params(16, 12, 2, 2, 4).unwrap();
        let fitted = fit_decoder_least_squares(&p, &seq).unwrap();
        assert_eq!(fitted.enc(), p.enc());
        assert!(
            mean_reconstruction_error(&fitted, &seq).unwrap()
                <= mean_reconstruction_error(&p, &seq).unwrap()
        );
    }
}
