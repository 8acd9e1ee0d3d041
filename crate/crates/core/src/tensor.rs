//! Dense tensors in channel-major, row-major order.
//!
//! Feature maps are `[C][H][W]`; weights are `[ID][OD][H_t][W_t]`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<Scalar>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Self {
        Tensor { dims: dims.to_vec(), data: vec![Scalar::zero(); dims.iter().product()] }
    }

    pub fn from_vec(dims: &[usize], data: Vec<Scalar>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!("dims {dims:?} need {n} elements, got {}", data.len())));
        }
        Ok(Tensor { dims: dims.to_vec(), data })
    }

    pub fn from_i64(dims: &[usize], data: &[i64]) -> Result<Self> {
        Self::from_vec(dims, data.iter().map(|&v| Scalar::from_int(v)).collect())
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> Scalar) -> Self {
        let n: usize = dims.iter().product();
        let mut idx = vec![0; dims.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for d in (0..dims.len()).rev() {
                idx[d] += 1;
                if idx[d] < dims[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Tensor { dims: dims.to_vec(), data }
    }

    /// Uniform random integers in `[lo, hi]`.
    pub fn random_int(dims: &[usize], lo: i64, hi: i64, rng: &mut impl Rng) -> Self {
        Self::from_fn(dims, |_| Scalar::from_int(rng.gen_range(lo..=hi)))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Scalar] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Scalar] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Scalar> {
        self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| {
            debug_assert!(i < d, "index {idx:?} out of bounds for {:?}", self.dims);
            acc * d + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &Scalar {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: Scalar) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn add_at(&mut self, idx: &[usize], v: &Scalar) {
        let o = self.offset(idx);
        self.data[o] += v;
    }

    /// `in[c][r][col]` of a 3-D map, zero outside the spatial bounds.
    pub fn at3_padded(&self, c: usize, r: isize, col: isize) -> Scalar {
        let (h, w) = (self.dims[1] as isize, self.dims[2] as isize);
        if r < 0 || col < 0 || r >= h || col >= w {
            Scalar::zero()
        } else {
            self.data[(c * self.dims[1] + r as usize) * self.dims[2] + col as usize].clone()
        }
    }

    pub fn reshape(self, dims: &[usize]) -> Result<Tensor> {
        Tensor::from_vec(dims, self.data)
    }

    /// Kernel `w[id][od]` of a 4-D weight tensor as a matrix.
    pub fn kernel(&self, id: usize, od: usize) -> Matrix {
        let (kh, kw) = (self.dims[2], self.dims[3]);
        let base = (id * self.dims[1] + od) * kh * kw;
        Matrix::from_vec(kh, kw, self.data[base..base + kh * kw].to_vec()).expect("kernel slice")
    }

    /// Channel `c` of a 3-D map as a matrix.
    pub fn channel(&self, c: usize) -> Matrix {
        let (h, w) = (self.dims[1], self.dims[2]);
        Matrix::from_vec(h, w, self.data[c * h * w..(c + 1) * h * w].to_vec()).expect("channel slice")
    }

    pub fn map(&self, f: impl Fn(&Scalar) -> Scalar) -> Tensor {
        Tensor { dims: self.dims.clone(), data: self.data.iter().map(f).collect() }
    }

    pub fn expect_dims(&self, what: &str, dims: &[usize]) -> Result<()> {
        if self.dims != dims {
            return Err(Error::Shape(format!("{what} has dims {:?}, expected {dims:?}", self.dims)));
        }
        Ok(())
    }
}
