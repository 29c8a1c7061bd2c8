//! Small dense matrices and tensors, sized at runtime.
//!
//! Chart geometry produces arrays with up to four indices whose dimension is
//! the chart dimension (two or three in practice). These types keep the index
//! conventions explicit and avoid pulling a linear-algebra stack into code
//! whose matrices are 2x2.

use serde::ser::{Serialize, SerializeSeq, Serializer};
use std::ops::{Index, IndexMut};

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m[[i, i]] = 1.0;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[[i, j]] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        let mut m = Matrix::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "row length must equal the number of rows");
            for (j, v) in row.iter().enumerate() {
                m[[i, j]] = *v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self[[j, i]])
    }

    pub fn mat_mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        Matrix::from_fn(self.dim, |i, j| {
            (0..self.dim).map(|k| self[[i, k]] * rhs[[k, j]]).sum()
        })
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[[i, j]] * v[j]).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        Matrix::from_fn(self.dim, |i, j| self[[i, j]] + rhs[[i, j]])
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        Matrix::from_fn(self.dim, |i, j| self[[i, j]] - rhs[[i, j]])
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| s * self[[i, j]])
    }

    /// Lower-triangular Cholesky factor, or `None` when the matrix is not
    /// symmetric positive definite.
    pub fn cholesky(&self) -> Option<Matrix> {
        let n = self.dim;
        let mut l = Matrix::zeros(n);
        for j in 0..n {
            let mut d = self[[j, j]];
            for k in 0..j {
                d -= l[[j, k]] * l[[j, k]];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let root = d.sqrt();
            l[[j, j]] = root;
            for i in (j + 1)..n {
                let mut s = self[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / root;
            }
        }
        Some(l)
    }

    /// Inverse of a symmetric positive definite matrix together with
    /// `sqrt(det)`, both obtained from the Cholesky factor.
    pub fn spd_inverse(&self) -> Option<(Matrix, f64)> {
        let n = self.dim;
        let l = self.cholesky()?;
        let sqrt_det = (0..n).map(|i| l[[i, i]]).product();
        let mut inv = Matrix::zeros(n);
        let mut col = vec![0.0; n];
        for e in 0..n {
            // Forward substitution: L y = e_e.
            for i in 0..n {
                let mut s = if i == e { 1.0 } else { 0.0 };
                for k in 0..i {
                    s -= l[[i, k]] * col[k];
                }
                col[i] = s / l[[i, i]];
            }
            // Back substitution: L^T x = y.
            for i in (0..n).rev() {
                let mut s = col[i];
                for k in (i + 1)..n {
                    s -= l[[k, i]] * col[k];
                }
                col[i] = s / l[[i, i]];
            }
            for i in 0..n {
                inv[[i, e]] = col[i];
            }
        }
        Some((inv, sqrt_det))
    }

    /// Determinant by LU decomposition with partial pivoting. Works for any
    /// square matrix, not only definite ones.
    pub fn determinant(&self) -> f64 {
        let n = self.dim;
        let mut a = self.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut pivot = col;
            for row in (col + 1)..n {
                if a[[row, col]].abs() > a[[pivot, col]].abs() {
                    pivot = row;
                }
            }
            if a[[pivot, col]] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    let tmp = a[[col, j]];
                    a[[col, j]] = a[[pivot, j]];
                    a[[pivot, j]] = tmp;
                }
                det = -det;
            }
            det *= a[[col, col]];
            for row in (col + 1)..n {
                let factor = a[[row, col]] / a[[col, col]];
                for j in col..n {
                    a[[row, j]] -= factor * a[[col, j]];
                }
            }
        }
        det
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[[i, j]]).collect())
            .collect()
    }
}

impl Index<[usize; 2]> for Matrix {
    type Output = f64;
    fn index(&self, [i, j]: [usize; 2]) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<[usize; 2]> for Matrix {
    fn index_mut(&mut self, [i, j]: [usize; 2]) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim))?;
        for row in self.rows() {
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

/// Dense three-index tensor `t[[i, j, k]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Tensor3 { dim, data: vec![0.0; dim * dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

impl Index<[usize; 3]> for Tensor3 {
    type Output = f64;
    fn index(&self, [i, j, k]: [usize; 3]) -> &f64 {
        &self.data[(i * self.dim + j) * self.dim + k]
    }
}

impl IndexMut<[usize; 3]> for Tensor3 {
    fn index_mut(&mut self, [i, j, k]: [usize; 3]) -> &mut f64 {
        &mut self.data[(i * self.dim + j) * self.dim + k]
    }
}

/// Dense four-index tensor `t[[i, j, k, l]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        Tensor4 { dim, data: vec![0.0; dim * dim * dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

impl Index<[usize; 4]> for Tensor4 {
    type Output = f64;
    fn index(&self, [i, j, k, l]: [usize; 4]) -> &f64 {
        &self.data[((i * self.dim + j) * self.dim + k) * self.dim + l]
    }
}

impl IndexMut<[usize; 4]> for Tensor4 {
    fn index_mut(&mut self, [i, j, k, l]: [usize; 4]) -> &mut f64 {
        &mut self.data[((i * self.dim + j) * self.dim + k) * self.dim + l]
    }
}
