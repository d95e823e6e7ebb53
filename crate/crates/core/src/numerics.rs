//! Dense matrices, grayscale images and the valid/full 2-D correlation pair.
//!
//! Everything here is double precision and allocation-per-call; there is no
//! attempt at BLAS-level performance. `conv2d_valid` is cross-correlation (no
//! kernel flip) and `conv2d_transposed` is its exact adjoint.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major values, rejecting wrong lengths and non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::from_vec",
                format!("{} values for {rows}x{cols}", rows * cols),
                format!("{} values", data.len()),
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "matrix entry {i} is not finite"
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// `self · v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::shape(
                "matvec",
                format!(
                    "vector of length {} for a {}x{} matrix",
                    self.cols, self.rows, self.cols
                ),
                format!("length {}", v.len()),
            ));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), v)).collect())
    }

    /// `selfᵀ · v`.
    pub fn matvec_transposed(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::shape(
                "matvec_transposed",
                format!(
                    "vector of length {} for a {}x{} matrix",
                    self.rows, self.rows, self.cols
                ),
                format!("length {}", v.len()),
            ));
        }
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o += m * vr;
            }
        }
        Ok(out)
    }

    /// `self += scale · u vᵀ`.
    pub fn add_outer(&mut self, scale: f64, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (r, &ur) in u.iter().enumerate() {
            let s = scale * ur;
            if s == 0.0 {
                continue;
            }
            for (m, &vc) in self.row_mut(r).iter_mut().zip(v) {
                *m += s * vc;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += other`, shapes must agree.
    pub fn add_assign(&mut self, other: &Matrix) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Grayscale image (or feature map), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape(
                "Image::from_vec",
                format!("{} values for {height}x{width}", height * width),
                format!("{} values", data.len()),
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("pixel {i} is not finite")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn add_assign(&mut self, other: &Image) {
        debug_assert_eq!(self.dims(), other.dims());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// Free-function form of [`Matrix::matvec`].
pub fn matvec(m: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    m.matvec(v)
}

/// Valid-mode cross-correlation: `out[r][c] = Σ_pq img[r+p][c+q] · kernel[p][q]`.
///
/// The kernel is traversed in row-major order starting from an accumulator of
/// zero, so a kernel covering the whole image reproduces a row-major dot product
/// bit for bit.
pub fn conv2d_valid(img: &Image, kernel: &Image) -> Result<Image> {
    let (h, w) = img.dims();
    let (kh, kw) = kernel.dims();
    if kh > h || kw > w || kh == 0 || kw == 0 {
        return Err(Error::shape(
            "conv2d_valid",
            format!("non-empty kernel no larger than the {h}x{w} image"),
            format!("{kh}x{kw} kernel"),
        ));
    }
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let mut out = Image::zeros(oh, ow);
    for r in 0..oh {
        for c in 0..ow {
            let mut acc = 0.0;
            for p in 0..kh {
                let img_row = &img.data[(r + p) * w + c..(r + p) * w + c + kw];
                let k_row = &kernel.data[p * kw..(p + 1) * kw];
                for (a, b) in img_row.iter().zip(k_row) {
                    acc += a * b;
                }
            }
            out.data[r * ow + c] = acc;
        }
    }
    Ok(out)
}

/// Full-mode transposed correlation, the adjoint of [`conv2d_valid`]: every input
/// pixel stamps a scaled copy of the kernel at its own position.
pub fn conv2d_transposed(img: &Image, kernel: &Image) -> Image {
    let (h, w) = img.dims();
    let (kh, kw) = kernel.dims();
    let (oh, ow) = (h + kh.saturating_sub(1), w + kw.saturating_sub(1));
    let mut out = Image::zeros(oh, ow);
    if kh == 0 || kw == 0 {
        return out;
    }
    for y in 0..h {
        for x in 0..w {
            let v = img.data[y * w + x];
            if v == 0.0 {
                continue;
            }
            for p in 0..kh {
                let out_row = &mut out.data[(y + p) * ow + x..(y + p) * ow + x + kw];
                let k_row = &kernel.data[p * kw..(p + 1) * kw];
                for (o, k) in out_row.iter_mut().zip(k_row) {
                    *o += v * k;
                }
            }
        }
    }
    out
}
