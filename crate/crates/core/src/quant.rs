//! Fixed-point rounding used by the quantized engine path.
//!
//! Values are rounded to `frac_bits` binary fractional digits with
//! round-half-to-even. Results are still carried as [`Scalar`] so they combine
//! with the exact path without conversion.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Nearest integer to `x`, ties to even.
pub fn round_half_even(x: &Scalar) -> BigInt {
    let fl = x.floor();
    let frac = x - &Scalar::from_bigint(fl.clone());
    let half = Scalar::ratio(1, 2);
    match frac.cmp(&half) {
        std::cmp::Ordering::Less => fl,
        std::cmp::Ordering::Greater => fl + BigInt::one(),
        std::cmp::Ordering::Equal => {
            if fl.is_even() {
                fl
            } else {
                fl + BigInt::one()
            }
        }
    }
}

pub fn quantize(x: &Scalar, frac_bits: u32) -> Scalar {
    let scaled = x.scale_pow2(frac_bits as i32);
    Scalar::from_bigint(round_half_even(&scaled)).scale_pow2(-(frac_bits as i32))
}

pub fn quantize_matrix(m: &Matrix, frac_bits: u32) -> Matrix {
    Matrix::from_fn(m.rows(), m.cols(), |r, c| quantize(m.get(r, c), frac_bits))
}

/// True when `x` is exactly representable with `frac_bits` fractional bits.
pub fn is_representable(x: &Scalar, frac_bits: u32) -> bool {
    let d = x.denom();
    let mut lim = BigInt::one();
    lim <<= frac_bits as usize;
    (&lim % &d).is_zero()
}
