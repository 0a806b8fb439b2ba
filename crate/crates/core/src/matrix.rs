//! Dense row-major matrices used as the frame containers throughout the
//! crate. Feature files hold `Matrix<f32>`; the CTC kernel works on
//! `Matrix<f64>` to keep its gradients finite-difference checkable.

use crate::error::{Error, Result};

/// A dense rows×cols matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    /// Wraps a flat row-major buffer. `data.len()` must equal `rows * cols`
    /// and both dimensions must be nonzero.
    pub fn from_flat(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Schema(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Schema(format!(
                "buffer holds {} values, expected {rows}x{cols} = {}",
                data.len(),
                rows * cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from row slices; all rows must share one length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Schema("matrix needs at least one row".into()))?;
        let cols = first.len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Schema(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Matrix::from_flat(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Stacks matrices vertically, in order. Column counts must agree.
    pub fn vstack(parts: &[&Matrix<T>]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Schema("vstack needs at least one matrix".into()))?;
        let cols = first.cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for m in parts {
            if m.cols != cols {
                return Err(Error::Schema(format!(
                    "cannot stack {}-column matrix onto {cols}-column matrix",
                    m.cols
                )));
            }
            data.extend_from_slice(&m.data);
            rows += m.rows;
        }
        Matrix::from_flat(rows, cols, data)
    }
}

impl Matrix<f32> {
    /// Exact widening of every entry; used where kernels need f64 math.
    pub fn to_f64(&self) -> Matrix<f64> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Matrix<f64> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Rounds every entry to f32; the storage precision of feature files.
    pub fn to_f32(&self) -> Matrix<f32> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v as f32).collect(),
        }
    }
}

/// Euclidean norm, accumulated left to right in f64.
pub fn norm_f64(v: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for &x in v {
        let x = x as f64;
        acc += x * x;
    }
    acc.sqrt()
}

/// Dot product of two f32 slices, accumulated left to right in f64.
pub fn dot_f64(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        acc += x as f64 * y as f64;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_rows_rejects_ragged_input() {
        let err = Matrix::from_rows(&[vec![1.0f32, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn vstack_concatenates_in_order() {
        let a = Matrix::from_rows(&[vec![1.0f32, 2.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![3.0f32, 4.0], vec![5.0, 6.0]]).unwrap();
        let s = Matrix::vstack(&[&a, &b]).unwrap();
        assert_eq!(s.rows(), 3);
        assert_eq!(s.row(2), &[5.0, 6.0]);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(Matrix::<f32>::from_flat(0, 4, vec![]).is_err());
        assert!(Matrix::<f32>::from_flat(4, 0, vec![]).is_err());
    }

    #[test]
    fn norm_matches_triangle() {
        assert_eq!(norm_f64(&[3.0, 4.0]), 5.0);
    }
}
