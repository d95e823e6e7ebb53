//! Decoder dictionaries as grayscale images. Each pooling group becomes a
//! horizontal strip of its members' tiles; strips sit on a near-square grid,
//! separated by one-pixel black lines.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ConvModelParams, ModelParams, PoolingTopology};
use crate::numerics::Image;

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Binary PGM (`P5`, maxval 255).
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Maps a tile's range onto 0..=255; flat tiles become 128.
fn tile_levels(values: &[f64]) -> Vec<u8> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![128; values.len()];
    }
    values
        .iter()
        .map(|v| (255.0 * (v - lo) / (hi - lo)).round() as u8)
        .collect()
}

fn layout(tiles: &[Image], topology: &PoolingTopology) -> GrayImage {
    let (th, tw) = tiles[0].dims();
    let k = topology.num_groups();
    let gs = topology.group_size();
    let cols = (k as f64).sqrt().ceil() as usize;
    let rows = k.div_ceil(cols);
    let (bw, bh) = (gs * tw, th);
    let width = cols * bw + cols - 1;
    let height = rows * bh + rows - 1;
    let mut pixels = vec![0u8; width * height];
    let levels: Vec<Vec<u8>> = tiles.iter().map(|t| tile_levels(t.as_slice())).collect();
    for (i, group) in topology.groups().iter().enumerate() {
        let (x0, y0) = ((i % cols) * (bw + 1), (i / cols) * (bh + 1));
        for (slot, &j) in group.iter().enumerate() {
            for y in 0..th {
                for x in 0..tw {
                    pixels[(y0 + y) * width + x0 + slot * tw + x] = levels[j][y * tw + x];
                }
            }
        }
    }
    GrayImage {
        width,
        height,
        pixels,
    }
}

/// Decoder columns as `√D × √D` tiles grouped by pooling neighbourhood.
pub fn dictionary_image(params: &ModelParams) -> Result<GrayImage> {
    let d = params.input_dim();
    let side = (d as f64).sqrt().round() as usize;
    if side * side != d {
        return Err(Error::InvalidArgument(format!(
            "input dimension {d} is not a perfect square"
        )));
    }
    let tiles: Vec<Image> = (0..params.num_hidden())
        .map(|j| Image::from_vec(side, side, params.dec().column(j)))
        .collect::<Result<_>>()?;
    Ok(layout(&tiles, params.topology()))
}

/// Decoder kernels of a convolutional model, laid out like [`dictionary_image`].
pub fn conv_dictionary_image(params: &ConvModelParams) -> GrayImage {
    layout(params.dec_kernels(), params.topology())
}

pub fn export_dictionary(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(&dictionary_image(params)?))?;
    Ok(())
}

pub fn export_conv_dictionary(params: &ConvModelParams, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(&conv_dictionary_image(params)))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_conv_params, init_params};
    use crate::numerics::Matrix;

    fn with_dec(d: usize, n: usize, gs: usize, stride: usize, dec: Matrix) -> ModelParams {
        init_params(d, n, gs, stride, 0)
            .unwrap()
            .with_decoder(dec)
            .unwrap()
    }

    #[test]
    fn zero_decoder_is_mid_gray() {
        let p = with_dec(9, 4, 2, 2, Matrix::zeros(9, 4));
        let img = dictionary_image(&p).unwrap();
        // two groups of two 3x3 tiles side by side: 2 columns of 6 plus a separator
        assert_eq!((img.width, img.height), (13, 3));
        for y in 0..3 {
            for x in 0..13 {
                assert_eq!(img.get(x, y), if x == 6 { 0 } else { 128 }, "({x},{y})");
            }
        }
    }

    #[test]
    fn vertical_edge_survives_normalization() {
        let mut dec = Matrix::zeros(9, 1);
        for r in 0..3 {
            dec.set(r * 3, 0, -0.2);
            dec.set(r * 3 + 1, 0, 0.1);
            dec.set(r * 3 + 2, 0, 0.4);
        }
        let img = dictionary_image(&with_dec(9, 1, 1, 1, dec)).unwrap();
        assert_eq!((img.width, img.height), (3, 3));
        for y in 0..3 {
            assert_eq!([img.get(0, y), img.get(1, y), img.get(2, y)], [0, 128, 255]);
        }
    }

    #[test]
    fn grid_layout_and_header() {
        // 5 groups -> 3 columns, 2 rows of 2x2 tiles in strips of 2
        let p = init_params(4, 10, 2, 2, 1).unwrap();
        let img = dictionary_image(&p).unwrap();
        assert_eq!((img.width, img.height), (3 * 4 + 2, 2 * 2 + 1));
        let bytes = encode_pgm(&img);
        let header = b"P5\n14 5\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len() - header.len(), 14 * 5);
        // separator row and column are black, as is the unused sixth cell
        assert!((0..14).all(|x| img.get(x, 2) == 0));
        assert!((0..5).all(|y| img.get(4, y) == 0));
        assert!((10..14).all(|x| img.get(x, 3) == 0 && img.get(x, 4) == 0));
    }

    #[test]
    fn non_square_input_rejected() {
        assert!(dictionary_image(&init_params(6, 4, 2, 2, 0).unwrap()).is_err());
    }

    #[test]
    fn conv_dictionary_dims() {
        let p = init_conv_params(4, 3, 5, 2, 2, 1, 0).unwrap();
        let img = conv_dictionary_image(&p);
        assert_eq!((img.width, img.height), (2 * 10 + 1, 3));
    }

    #[test]
    fn written_file_matches_encoding() {
        let p = init_params(16, 8, 4, 2, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pgm");
        export_dictionary(&p, &path).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            encode_pgm(&dictionary_image(&p).unwrap())
        );
    }
}
