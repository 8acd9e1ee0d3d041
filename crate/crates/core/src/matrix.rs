//! Small dense row-major matrices over [`Scalar`].

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Scalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Scalar>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} elements cannot fill a {}x{} matrix", data.len(), rows, cols)));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from integer rows; every row must have the same length.
    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let data = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), cols, "ragged matrix literal");
                r.iter().map(|&v| Scalar::from_int(v))
            })
            .collect();
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let n = rows.len();
        let data: Vec<Scalar> = rows
            .into_iter()
            .flat_map(|r| {
                assert_eq!(r.len(), cols, "ragged matrix literal");
                r
            })
            .collect();
        Matrix { rows: n, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
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

    pub fn get(&self, r: usize, c: usize) -> &Scalar {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Scalar) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Scalar] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[Scalar] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Scalar> {
        self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] += &(a * b);
                }
            }
        }
        Ok(out)
    }

    /// Element-wise product.
    pub fn hadamard(&self, rhs: &Matrix) -> Result<Matrix> {
        self.check_same_shape(rhs)?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a * b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        self.check_same_shape(rhs)?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn add_assign(&mut self, rhs: &Matrix) -> Result<()> {
        self.check_same_shape(rhs)?;
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        Ok(())
    }

    /// `self += a ⊙ b` without allocating the intermediate product.
    pub fn fma_hadamard(&mut self, a: &Matrix, b: &Matrix) -> Result<()> {
        self.check_same_shape(a)?;
        self.check_same_shape(b)?;
        for ((acc, x), y) in self.data.iter_mut().zip(&a.data).zip(&b.data) {
            if !x.is_zero() && !y.is_zero() {
                *acc += &(x * y);
            }
        }
        Ok(())
    }

    pub fn scale(&self, s: &Scalar) -> Matrix {
        let data = self.data.iter().map(|a| a * s).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// Leading `rows x cols` block.
    pub fn top_left(&self, rows: usize, cols: usize) -> Matrix {
        assert!(rows <= self.rows && cols <= self.cols);
        Matrix::from_fn(rows, cols, |r, c| self.get(r, c).clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    fn check_same_shape(&self, rhs: &Matrix) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::Shape(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Scalar;
    fn index(&self, (r, c): (usize, usize)) -> &Scalar {
        self.get(r, c)
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let cells: Vec<String> = self.row(r).iter().map(ToString::to_string).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_transpose() {
        let a = Matrix::from_i64_rows(&[&[1, 2, 3], &[4, 5, 6]]);
        let b = a.transpose();
        let p = a.matmul(&b).unwrap();
        assert_eq!(p, Matrix::from_i64_rows(&[&[14, 32], &[32, 77]]));
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn hadamard_requires_equal_shapes() {
        let a = Matrix::identity(2);
        let b = Matrix::zeros(2, 3);
        assert!(a.hadamard(&b).is_err());
        let mut acc = Matrix::zeros(2, 2);
        acc.fma_hadamard(&a, &a).unwrap();
        acc.fma_hadamard(&a, &a).unwrap();
        assert_eq!(acc, Matrix::identity(2).scale(&Scalar::from_int(2)));
    }
}
