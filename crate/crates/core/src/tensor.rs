//! Dense third- and fourth-order tensors.
//!
//! Storage is column-major in every mode: entry `(i, j, k)` of an
//! `I x J x K` tensor lives at `i + I * (j + J * k)`, and entry `(i, j, k, h)`
//! of an `I x J x K x H` tensor at `i + I * (j + J * (k + K * h))`.
//! Frontal slices `(:, :, k)` are therefore contiguous column-major matrices,
//! and most products reduce to a single matrix multiply on a reshaped view.

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};
use crate::Matrix;

/// Tensor mode selector (1-based in the usual notation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
    Three,
}

/// Cyclic ordering of the merged modes in a matricization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    #[default]
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(dims: (usize, usize, usize), data: Vec<f64>) -> Result<Self> {
        let len = dims.0 * dims.1 * dims.2;
        if data.len() != len {
            return Err(Error::shape(format!(
                "tensor of dims {dims:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Tensor3 { dims, data })
    }

    pub fn zeros(i: usize, j: usize, k: usize) -> Self {
        Tensor3 {
            dims: (i, j, k),
            data: vec![0.0; i * j * k],
        }
    }

    pub fn from_fn(i: usize, j: usize, k: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(i * j * k);
        for kk in 0..k {
            for jj in 0..j {
                for ii in 0..i {
                    data.push(f(ii, jj, kk));
                }
            }
        }
        Tensor3 { dims: (i, j, k), data }
    }

    /// Stacks equally sized matrices as frontal slices.
    pub fn from_slices(slices: &[Matrix]) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(Error::shape("cannot build a tensor from zero slices"));
        };
        let (rows, cols) = first.shape();
        let mut data = Vec::with_capacity(rows * cols * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (rows, cols) {
                return Err(Error::shape(format!(
                    "slice {k} has shape {:?}, expected {:?}",
                    s.shape(),
                    (rows, cols)
                )));
            }
            data.extend_from_slice(s.as_slice());
        }
        Ok(Tensor3 {
            dims: (rows, cols, slices.len()),
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        let (ni, nj, _) = self.dims;
        i + ni * (j + nj * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    /// Frontal slice `(:, :, k)` as a view.
    pub fn slice_view(&self, k: usize) -> DMatrixView<'_, f64> {
        let (ni, nj, _) = self.dims;
        let start = k * ni * nj;
        DMatrixView::from_slice(&self.data[start..start + ni * nj], ni, nj)
    }

    /// Frontal slice `(:, :, k)`, an `I x J` matrix.
    pub fn frontal(&self, k: usize) -> Matrix {
        self.slice_view(k).into_owned()
    }

    /// Horizontal slice `(i, :, :)`, a `J x K` matrix.
    pub fn horizontal(&self, i: usize) -> Matrix {
        let (_, nj, nk) = self.dims;
        DMatrix::from_fn(nj, nk, |j, k| self.get(i, j, k))
    }

    /// Lateral slice `(:, j, :)`, an `I x K` matrix.
    pub fn lateral(&self, j: usize) -> Matrix {
        let (ni, _, nk) = self.dims;
        DMatrix::from_fn(ni, nk, |i, k| self.get(i, j, k))
    }

    /// Extent along `mode`.
    pub fn extent(&self, mode: Mode) -> usize {
        match mode {
            Mode::One => self.dims.0,
            Mode::Two => self.dims.1,
            Mode::Three => self.dims.2,
        }
    }

    /// The tensor viewed as an `IJ x K` matrix whose columns are vectorized
    /// frontal slices.
    pub fn tube_view(&self) -> DMatrixView<'_, f64> {
        let (ni, nj, nk) = self.dims;
        DMatrixView::from_slice(&self.data, ni * nj, nk)
    }

    pub fn inner_product(&self, other: &Tensor3) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::shape(format!(
                "inner product of tensors with dims {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum()
    }

    /// Mode-`mode` product with `m`: `(A x_3 M)(i, j, h) = sum_k a_ijk m_hk`,
    /// and analogously for the other modes.
    pub fn mode_product(&self, m: &Matrix, mode: Mode) -> Result<Tensor3> {
        let (ni, nj, nk) = self.dims;
        let inner = self.extent(mode);
        if m.ncols() != inner {
            return Err(Error::shape(format!(
                "mode {mode:?} product needs a matrix with {inner} columns, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let h = m.nrows();
        match mode {
            Mode::One => {
                let unfolded = DMatrixView::from_slice(&self.data, ni, nj * nk);
                let out = m * unfolded;
                Tensor3::new((h, nj, nk), out.as_slice().to_vec())
            }
            Mode::Two => {
                let mut data = Vec::with_capacity(ni * h * nk);
                let mt = m.transpose();
                for k in 0..nk {
                    let prod = self.slice_view(k) * &mt;
                    data.extend_from_slice(prod.as_slice());
                }
                Tensor3::new((ni, h, nk), data)
            }
            Mode::Three => {
                let out = self.tube_view() * m.transpose();
                Tensor3::new((ni, nj, h), out.as_slice().to_vec())
            }
        }
    }

    /// Mode-[3;3] contracted product
    /// `<A, B>(i1, j1, i2, j2) = sum_k a_{i1 j1 k} b_{i2 j2 k}`.
    pub fn contracted_product_33(&self, other: &Tensor3) -> Result<Tensor4> {
        let (i1, j1, k1) = self.dims;
        let (i2, j2, k2) = other.dims;
        if k1 != k2 {
            return Err(Error::shape(format!(
                "contracted product over mode 3 needs equal extents, got {k1} and {k2}"
            )));
        }
        let out = self.tube_view() * other.tube_view().transpose();
        Tensor4::new((i1, j1, i2, j2), out.as_slice().to_vec())
    }

    /// Gram matrix of the frontal slices, `G_kl = <X_k, X_l>`.
    pub fn slice_gram(&self) -> Matrix {
        let v = self.tube_view();
        v.transpose() * v
    }

    /// Unfolds the tensor along `mode`.
    ///
    /// Forward cyclic column indices (0-based): mode 1 `p = j + k J`,
    /// mode 2 `p = k + i K`, mode 3 `p = i + j I`. Backward cyclic: mode 1
    /// `p = k + j K`, mode 2 `p = i + k I`, mode 3 `p = j + i J`.
    pub fn matricize(&self, mode: Mode, ordering: Ordering) -> Matrix {
        let (ni, nj, nk) = self.dims;
        let (rows, cols) = unfolded_shape(self.dims, mode);
        let mut out = DMatrix::zeros(rows, cols);
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    let (r, c) = unfold_index((ni, nj, nk), mode, ordering, i, j, k);
                    out[(r, c)] = self.get(i, j, k);
                }
            }
        }
        out
    }

    /// Inverse of [`Tensor3::matricize`].
    pub fn fold(m: &Matrix, dims: (usize, usize, usize), mode: Mode, ordering: Ordering) -> Result<Tensor3> {
        let expected = unfolded_shape(dims, mode);
        if m.shape() != expected {
            return Err(Error::shape(format!(
                "cannot fold a {:?} matrix into dims {dims:?} along {mode:?}",
                m.shape()
            )));
        }
        Ok(Tensor3::from_fn(dims.0, dims.1, dims.2, |i, j, k| {
            m[unfold_index(dims, mode, ordering, i, j, k)]
        }))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor3 {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Keeps the frontal slices listed in `indices`, in that order.
    pub fn select_slices(&self, indices: &[usize]) -> Tensor3 {
        let (ni, nj, _) = self.dims;
        let mut data = Vec::with_capacity(ni * nj * indices.len());
        for &k in indices {
            let start = k * ni * nj;
            data.extend_from_slice(&self.data[start..start + ni * nj]);
        }
        Tensor3 {
            dims: (ni, nj, indices.len()),
            data,
        }
    }
}

fn unfolded_shape(dims: (usize, usize, usize), mode: Mode) -> (usize, usize) {
    let (ni, nj, nk) = dims;
    match mode {
        Mode::One => (ni, nj * nk),
        Mode::Two => (nj, ni * nk),
        Mode::Three => (nk, ni * nj),
    }
}

fn unfold_index(
    dims: (usize, usize, usize),
    mode: Mode,
    ordering: Ordering,
    i: usize,
    j: usize,
    k: usize,
) -> (usize, usize) {
    let (ni, nj, nk) = dims;
    match (mode, ordering) {
        (Mode::One, Ordering::Forward) => (i, j + k * nj),
        (Mode::One, Ordering::Backward) => (i, k + j * nk),
        (Mode::Two, Ordering::Forward) => (j, k + i * nk),
        (Mode::Two, Ordering::Backward) => (j, i + k * ni),
        (Mode::Three, Ordering::Forward) => (k, i + j * ni),
        (Mode::Three, Ordering::Backward) => (k, j + i * nj),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dims: (usize, usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn new(dims: (usize, usize, usize, usize), data: Vec<f64>) -> Result<Self> {
        let len = dims.0 * dims.1 * dims.2 * dims.3;
        if data.len() != len {
            return Err(Error::shape(format!(
                "tensor of dims {dims:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Tensor4 { dims, data })
    }

    pub fn zeros(dims: (usize, usize, usize, usize)) -> Self {
        Tensor4 {
            dims,
            data: vec![0.0; dims.0 * dims.1 * dims.2 * dims.3],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize, h: usize) -> usize {
        let (ni, nj, nk, _) = self.dims;
        i + ni * (j + nj * (k + nk * h))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, h: usize) -> f64 {
        self.data[self.offset(i, j, k, h)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, h: usize, value: f64) {
        let o = self.offset(i, j, k, h);
        self.data[o] = value;
    }

    /// Tensor trace over the paired modes [1,2;3,4]: `sum_ij b_ijij`.
    pub fn trace(&self) -> Result<f64> {
        let (ni, nj, nk, nh) = self.dims;
        if ni != nk || nj != nh {
            return Err(Error::shape(format!(
                "tensor trace needs dims of the form (I, J, I, J), got {:?}",
                self.dims
            )));
        }
        let mut sum = 0.0;
        for j in 0..nj {
            for i in 0..ni {
                sum += self.get(i, j, i, j);
            }
        }
        Ok(sum)
    }

    /// Matricization `B_(1,2;3,4)` of size `IJ x KH` with row `i + j I` and
    /// column `k + h K`. With this crate's storage order it is a reshape.
    pub fn matricize_1234(&self) -> Matrix {
        let (ni, nj, nk, nh) = self.dims;
        DMatrix::from_column_slice(ni * nj, nk * nh, &self.data)
    }
}
