//! Dense matrix containers.
//!
//! Matrices are stored row-major in a flat `Vec<f64>`. Problems in this
//! crate stay small (dimension up to a few hundred), so everything is dense
//! and there are no sparse paths.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// A dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Column `j` as an owned vector.
    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, r) in orow.iter_mut().zip(rrow) {
                    *o += a * r;
                }
            }
        }
        out
    }

    /// `self * v` for a vector `v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&mut self, a: f64) {
        for x in &mut self.data {
            *x *= a;
        }
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// A symmetric matrix, symmetrized on construction.
///
/// `entries(i,j) == entries(j,i)` holds exactly after construction; inputs
/// are averaged as `(A + A')/2`. Construction rejects non-finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    inner: Mat,
}

impl SymMat {
    /// Symmetrize `m` as `(m + m')/2`.
    pub fn new(m: Mat) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("symmetric matrix entries".into()));
        }
        let n = m.rows();
        let mut s = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(SymMat { inner: s })
    }

    pub fn zeros(n: usize) -> Self {
        SymMat {
            inner: Mat::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        SymMat {
            inner: Mat::identity(n),
        }
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        SymMat { inner: m }
    }

    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.inner
    }

    pub fn into_mat(self) -> Mat {
        self.inner
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius inner product `<self, other>`.
    pub fn dot(&self, other: &SymMat) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.inner
            .data()
            .iter()
            .zip(other.inner.data())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.inner.frob_norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    /// `self + a * I`.
    pub fn add_diag(&self, a: f64) -> SymMat {
        let mut m = self.inner.clone();
        for i in 0..m.rows() {
            m[(i, i)] += a;
        }
        SymMat { inner: m }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.inner[(i, j)] = v;
        self.inner[(j, i)] = v;
    }
}

impl Index<(usize, usize)> for SymMat {
    type Output = f64;

    fn index(&self, ij: (usize, usize)) -> &f64 {
        &self.inner[ij]
    }
}
