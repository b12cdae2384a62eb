//! Minimal dense row-major matrix used by the linear environments and policies.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                context: "matrix row",
                expected: c,
                got: bad.len(),
            });
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![T::one(); n])
    }

    pub fn diag(d: &[T]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m.data[i * n + i] = x;
        }
        m
    }

    pub fn scaled(mut self, k: T) -> Self {
        self.data.iter_mut().for_each(|x| *x *= k);
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    /// `self · x`. Panics on length mismatch; callers check dimensions up front.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "matrix-vector dimension mismatch");
        self.data
            .chunks_exact(self.cols.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `xᵀ · self · x` for a square matrix.
    pub fn quad_form(&self, x: &[T]) -> T {
        crate::scalar::dot(x, &self.mul_vec(x))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Positive semidefiniteness via a pivoted LDLᵀ sweep on a symmetric matrix.
    pub fn is_psd(&self, tol: T) -> bool {
        if !self.is_symmetric(tol) {
            return false;
        }
        let n = self.rows;
        let mut a = self.data.clone();
        for k in 0..n {
            let pivot = a[k * n + k];
            if pivot < -tol {
                return false;
            }
            if pivot.abs() <= tol {
                // Zero pivot: the rest of the column must vanish too.
                if ((k + 1)..n).any(|i| a[i * n + k].abs() > tol) {
                    return false;
                }
                continue;
            }
            for i in (k + 1)..n {
                let f = a[i * n + k] / pivot;
                for j in (k + 1)..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= f * akj;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_and_quad_form() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![3.0, 7.0]);
        let d = Matrix::diag(&[0.1, 0.9]);
        assert!((d.quad_form(&[1.0, 1.0]) - 1.0f64).abs() < 1e-15);
    }

    #[test]
    fn psd_detection() {
        assert!(Matrix::<f64>::diag(&[0.9, 0.1]).is_psd(1e-12));
        assert!(Matrix::<f64>::diag(&[0.0, 1.0]).is_psd(1e-12));
        assert!(!Matrix::<f64>::diag(&[-0.1, 1.0]).is_psd(1e-12));
        let indefinite = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(!indefinite.is_psd(1e-12));
        let ragged = Matrix::<f64>::from_rows(&[vec![1.0], vec![1.0, 2.0]]);
        assert!(ragged.is_err());
    }
}
