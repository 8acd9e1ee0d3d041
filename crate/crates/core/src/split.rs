//! Kernel splitting for kernel sizes the shared datapath does not support.
//!
//! An `H_t × W_t` kernel becomes a grid of `k × k` pieces, zero-padded at the
//! right and bottom. Piece `(i, j)` is applied to the feature map shifted by
//! `(ik, jk)` and the partial results are summed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPiece {
    pub i: usize,
    pub j: usize,
    pub kernel: Matrix,
}

impl SplitPiece {
    /// Feature-map offset `(ik, jk)` of this piece.
    pub fn offset(&self, k: usize) -> (usize, usize) {
        (self.i * k, self.j * k)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPlan {
    pub target_h: usize,
    pub target_w: usize,
    pub base_k: usize,
    pub pieces: Vec<SplitPiece>,
}

/// Piece grid for a kernel shape, without the kernel values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SplitShape {
    pub base_k: usize,
    pub rows: usize,
    pub cols: usize,
}

impl SplitShape {
    pub fn new(kh: usize, kw: usize, base_k: usize) -> Self {
        SplitShape { base_k, rows: kh.div_ceil(base_k), cols: kw.div_ceil(base_k) }
    }

    pub fn count(&self) -> usize {
        self.rows * self.cols
    }

    /// Height of the padded kernel, `⌈H_t/k⌉·k`.
    pub fn padded_h(&self) -> usize {
        self.rows * self.base_k
    }

    pub fn padded_w(&self) -> usize {
        self.cols * self.base_k
    }
}

pub fn split_count(kh: usize, kw: usize, base_k: usize) -> usize {
    SplitShape::new(kh, kw, base_k).count()
}

pub fn split_kernel(kt: &Matrix, base_k: usize) -> Result<SplitPlan> {
    let (h, w) = kt.shape();
    if h == 0 || w == 0 {
        return Err(Error::Shape("cannot split an empty kernel".into()));
    }
    if ![1, 3, 5].contains(&base_k) {
        return Err(Error::Config(format!("base kernel {base_k} is not supported by any mode")));
    }
    let shape = SplitShape::new(h, w, base_k);
    let mut pieces = Vec::with_capacity(shape.count());
    for i in 0..shape.rows {
        for j in 0..shape.cols {
            let kernel = Matrix::from_fn(base_k, base_k, |a, b| {
                let (r, c) = (i * base_k + a, j * base_k + b);
                if r < h && c < w {
                    kt.get(r, c).clone()
                } else {
                    Scalar::zero()
                }
            });
            pieces.push(SplitPiece { i, j, kernel });
        }
    }
    Ok(SplitPlan { target_h: h, target_w: w, base_k, pieces })
}

impl SplitPlan {
    pub fn shape(&self) -> SplitShape {
        SplitShape::new(self.target_h, self.target_w, self.base_k)
    }

    /// Place every piece at its offset and crop back to `H_t × W_t`.
    pub fn reassemble(&self) -> Matrix {
        let k = self.base_k;
        let mut out = Matrix::zeros(self.target_h, self.target_w);
        for p in &self.pieces {
            let (oi, oj) = p.offset(k);
            for a in 0..k {
                for b in 0..k {
                    let (r, c) = (oi + a, oj + b);
                    if r < self.target_h && c < self.target_w {
                        out.set(r, c, p.kernel.get(a, b).clone());
                    }
                }
            }
        }
        out
    }
}

/// Valid 2-D correlation of `input` with `kernel`; reads past the input edge
/// return zero, so the output is `(H - kh + 1) × (W - kw + 1)`.
pub fn correlate_valid(input: &Matrix, kernel: &Matrix) -> Matrix {
    let (ih, iw) = input.shape();
    let (kh, kw) = kernel.shape();
    let (oh, ow) = (ih + 1 - kh, iw + 1 - kw);
    correlate_at(input, kernel, (0, 0), oh, ow)
}

fn correlate_at(input: &Matrix, kernel: &Matrix, offset: (usize, usize), oh: usize, ow: usize) -> Matrix {
    let (ih, iw) = input.shape();
    Matrix::from_fn(oh, ow, |x, y| {
        let mut acc = Scalar::zero();
        for a in 0..kernel.rows() {
            for b in 0..kernel.cols() {
                let (r, c) = (x + offset.0 + a, y + offset.1 + b);
                let kv = kernel.get(a, b);
                if r < ih && c < iw && !kv.is_zero() {
                    acc += &(input.get(r, c) * kv);
                }
            }
        }
        acc
    })
}

/// Convolve piece by piece at the piece offsets and sum.
pub fn split_convolve(input: &Matrix, plan: &SplitPlan) -> Matrix {
    let (ih, iw) = input.shape();
    let (oh, ow) = (ih + 1 - plan.target_h, iw + 1 - plan.target_w);
    let mut out = Matrix::zeros(oh, ow);
    for p in &plan.pieces {
        let part = correlate_at(input, &p.kernel, p.offset(plan.base_k), oh, ow);
        out.add_assign(&part).expect("same output shape");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kernel(h: usize, w: usize) -> Matrix {
        Matrix::from_fn(h, w, |r, c| Scalar::from_int((r * w + c) as i64 + 1))
    }

    #[test]
    fn seven_by_seven_on_three_gives_nine_pieces() {
        let plan = split_kernel(&kernel(7, 7), 3).unwrap();
        assert_eq!(plan.pieces.len(), 9);
        assert_eq!(plan.reassemble(), kernel(7, 7));
    }

    #[test]
    fn supported_size_is_a_single_piece() {
        let k = kernel(3, 3);
        let plan = split_kernel(&k, 3).unwrap();
        assert_eq!(plan.pieces.len(), 1);
        assert_eq!(plan.pieces[0].kernel, k);
    }

    #[test]
    fn one_by_seven_last_piece() {
        let k = kernel(1, 7);
        let plan = split_kernel(&k, 3).unwrap();
        assert_eq!(plan.pieces.len(), 3);
        let last = plan.pieces.iter().find(|p| (p.i, p.j) == (0, 2)).unwrap();
        let z = Scalar::zero();
        assert_eq!(last.kernel.row(0), &[k.get(0, 6).clone(), z.clone(), z.clone()]);
        assert!(last.kernel.row(1).iter().all(Scalar::is_zero));
        assert!(last.kernel.row(2).iter().all(Scalar::is_zero));
    }

    #[test]
    fn rejects_unsupported_base() {
        assert!(split_kernel(&kernel(3, 3), 2).is_err());
        assert!(split_kernel(&Matrix::zeros(0, 3), 3).is_err());
    }

    proptest! {
        #[test]
        fn split_sum_equals_direct(
            kh in 1usize..=9, kw in 1usize..=9, base in prop::sample::select(vec![1usize, 3, 5]),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut next = move || rng.gen_range(-8i64..=8);
            let k = Matrix::from_fn(kh, kw, |_, _| Scalar::from_int(next()));
            let input = Matrix::from_fn(kh + 3, kw + 2, |_, _| Scalar::from_int(next()));
            let plan = split_kernel(&k, base).unwrap();
            prop_assert_eq!(plan.pieces.len(), kh.div_ceil(base) * kw.div_ceil(base));
            prop_assert_eq!(plan.reassemble(), k.clone());
            prop_assert_eq!(split_convolve(&input, &plan), correlate_valid(&input, &k));
        }
    }
}
