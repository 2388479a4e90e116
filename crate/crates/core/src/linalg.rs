use std::ops::Index;

use crate::error::{check_dim, Error, Result};
use crate::exec::{self, Execution};

/// Dense real vector whose entries are all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    /// Validates that `data` is non-empty and finite.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(DenseVector { data })
    }

    /// Wraps data already known to be finite. Debug builds still check.
    pub(crate) fn from_vec(data: Vec<f64>) -> Self {
        debug_assert!(!data.is_empty());
        debug_assert!(data.iter().all(|v| v.is_finite()), "non-finite entry");
        DenseVector { data }
    }

    pub fn zeros(n: usize) -> Self {
        Self::filled(n, 0.0)
    }

    pub fn filled(n: usize, value: f64) -> Self {
        assert!(n > 0 && value.is_finite());
        DenseVector {
            data: vec![value; n],
        }
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        dot(&self.data, &other.data)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self - other`.
    pub fn sub(&self, other: &DenseVector) -> DenseVector {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self + other`.
    pub fn add(&self, other: &DenseVector) -> DenseVector {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> DenseVector {
        self.map(|v| c * v)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &DenseVector) -> DenseVector {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseVector {
        DenseVector::from_vec(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &DenseVector, f: impl Fn(f64, f64) -> f64) -> DenseVector {
        debug_assert_eq!(self.len(), other.len());
        DenseVector::from_vec(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Checks that `other` has the same length.
    pub fn check_same_len(&self, other: &DenseVector) -> Result<()> {
        check_dim(self.len(), other.len())
    }

    pub fn concat(parts: &[DenseVector]) -> DenseVector {
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        DenseVector::from_vec(data)
    }

    pub fn slice(&self, start: usize, end: usize) -> DenseVector {
        DenseVector::from_vec(self.data[start..end].to_vec())
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl<'a> IntoIterator for &'a DenseVector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.data.iter()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Matrix-vector products below this many entries stay sequential.
const PAR_MATVEC_MIN_ENTRIES: usize = 1 << 15;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyVector);
        }
        check_dim(rows * cols, data.len())?;
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_row_major(rows, cols, data)
    }

    pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Result<Self> {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        DenseMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// `A x`, one dot product per row. Row results do not depend on the
    /// execution strategy.
    pub fn matvec(&self, x: &[f64], exec: Execution) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let exec = if self.data.len() >= PAR_MATVEC_MIN_ENTRIES {
            exec
        } else {
            Execution::Sequential
        };
        let mut out = vec![0.0; self.rows];
        exec::fill_indexed(exec, &mut out, |i| dot(self.row(i), x));
        out
    }

    /// Largest singular value squared (`||A||_2^2`) by power iteration on `A^T A`.
    pub fn spectral_norm_sq(&self, iters: usize) -> f64 {
        let t = self.transpose();
        let mut v = vec![1.0 / (self.cols as f64).sqrt(); self.cols];
        let mut est = 0.0;
        for _ in 0..iters {
            let av = self.matvec(&v, Execution::Sequential);
            let w = t.matvec(&av, Execution::Sequential);
            let nw = dot(&w, &w).sqrt();
            if nw == 0.0 {
                return 0.0;
            }
            let next = dot(&v, &w);
            v = w.iter().map(|x| x / nw).collect();
            if (next - est).abs() <= 1e-14 * next.abs() {
                est = next;
                break;
            }
            est = next;
        }
        // Rayleigh quotient of the final iterate
        let av = self.matvec(&v, Execution::Sequential);
        est.max(dot(&av, &av))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(DenseVector::new(vec![]), Err(Error::EmptyVector)));
        assert!(matches!(
            DenseVector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(DenseVector::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn matvec_matches_manual() {
        let a = DenseMatrix::from_row_major(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(a.matvec(&[1.0, 0.0, -1.0], Execution::Sequential), vec![-2.0, -2.0]);
        assert_eq!(a.transpose().matvec(&[1.0, 1.0], Execution::Parallel), vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| if i == j { (i + 1) as f64 } else { 0.0 }).unwrap();
        assert!((a.spectral_norm_sq(500) - 9.0).abs() < 1e-9);
    }
}
