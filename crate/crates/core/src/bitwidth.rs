//! Word-width growth of the input and weight transforms.
//!
//! Two numbers are produced for every (mode, role) pair:
//!
//! * an analytic bound, `2·⌈log2 R⌉ + 2·F`, where `R` is the largest row
//!   absolute sum of the transform matrix and `F` the largest
//!   `⌈log2 denominator⌉` among its entries;
//! * an oracle value from the true extremes of every transformed entry over all
//!   signed `in_bits` inputs, expressed as the smallest signed word that holds
//!   them with `⌈log2 L⌉` fractional bits (`L` the common denominator).
//!
//! The transform is linear and every output entry depends on each input
//! coordinate independently, so per-coordinate extremes give the exact range.
//! Where the support of an entry is small enough the oracle also enumerates
//! every input combination and checks that it lands on the same range.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde::Serialize;

use crate::matrix::Matrix;
use crate::mode::WinogradMode;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Input,
    Weight,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::Input => "input",
            Role::Weight => "weight",
        })
    }
}

/// Enumerations larger than this fall back to the per-coordinate extremes.
pub const ENUMERATION_LIMIT: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub min: Scalar,
    pub max: Scalar,
    pub frac_bits: u32,
    pub width: u32,
    pub growth: i64,
    /// Output entries whose range was confirmed by full enumeration.
    pub enumerated_entries: usize,
    pub total_entries: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BitwidthReport {
    pub mode: String,
    pub role: Role,
    pub in_bits: u32,
    pub analytic: i64,
    pub oracle: OracleResult,
    pub published: Option<i64>,
}

impl BitwidthReport {
    pub fn analytic_matches_published(&self) -> Option<bool> {
        self.published.map(|p| p == self.analytic)
    }

    pub fn oracle_matches_published(&self) -> Option<bool> {
        self.published.map(|p| p == self.oracle.growth)
    }
}

pub fn transform_matrix(mode: &WinogradMode, role: Role) -> &Matrix {
    match role {
        Role::Input => mode.bt(),
        Role::Weight => mode.g(),
    }
}

/// Smallest `e ≥ 0` with `2^e ≥ x`.
fn ceil_log2(x: &Scalar) -> u32 {
    let mut e = 0;
    let mut p = Scalar::one();
    while &p < x {
        p = &p * &Scalar::from_int(2);
        e += 1;
    }
    e
}

fn ceil_log2_int(x: &BigInt) -> u32 {
    ceil_log2(&Scalar::from_bigint(x.clone()))
}

/// Analytic growth: `2·⌈log2(max row abs-sum)⌉ + 2·max ⌈log2 denominator⌉`.
pub fn bitwidth_growth(mode: &WinogradMode, role: Role, in_bits: u32) -> i64 {
    assert!((2..=16).contains(&in_bits), "in_bits must be in [2, 16]");
    let t = transform_matrix(mode, role);
    let row_sum =
        (0..t.rows()).map(|r| t.row(r).iter().map(Scalar::abs).sum::<Scalar>()).max().unwrap_or_else(Scalar::zero);
    let frac = t.data().iter().map(|v| ceil_log2_int(&v.denom())).max().unwrap_or(0);
    2 * ceil_log2(&row_sum) as i64 + 2 * frac as i64
}

fn signed_range(bits: u32) -> (i64, i64) {
    (-(1i64 << (bits - 1)), (1i64 << (bits - 1)) - 1)
}

/// Coefficients of output entry `(a, b)` over input coordinate `(x, y)`.
fn coefficients(t: &Matrix, a: usize, b: usize) -> Vec<Scalar> {
    let n = t.cols();
    let mut out = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            out.push(t.get(a, x) * t.get(b, y));
        }
    }
    out
}

fn extremes(coeffs: &[Scalar], lo: i64, hi: i64) -> (Scalar, Scalar) {
    let (lo, hi) = (Scalar::from_int(lo), Scalar::from_int(hi));
    let mut mn = Scalar::zero();
    let mut mx = Scalar::zero();
    for c in coeffs.iter().filter(|c| !c.is_zero()) {
        let (a, b) = (c * &lo, c * &hi);
        if a < b {
            mn += &a;
            mx += &b;
        } else {
            mn += &b;
            mx += &a;
        }
    }
    (mn, mx)
}

/// Full enumeration over the non-zero support, in integer units of `1/scale`.
fn enumerate(coeffs: &[Scalar], scale: &BigInt, lo: i64, hi: i64) -> Option<(Scalar, Scalar)> {
    let support: Vec<i64> = coeffs
        .iter()
        .filter(|c| !c.is_zero())
        .map(|c| (c * &Scalar::from_bigint(scale.clone())).to_i64())
        .collect::<Option<_>>()?;
    let values = (hi - lo + 1) as u64;
    let space = values.checked_pow(support.len() as u32)?;
    if space > ENUMERATION_LIMIT {
        return None;
    }
    let mut digits = vec![lo; support.len()];
    let (mut mn, mut mx) = (i64::MAX, i64::MIN);
    loop {
        let v: i64 = support.iter().zip(&digits).map(|(c, d)| c * d).sum();
        mn = mn.min(v);
        mx = mx.max(v);
        let mut i = 0;
        loop {
            if i == digits.len() {
                let s = Scalar::from_bigint(scale.clone());
                return Some((&Scalar::from_int(mn) / &s, &Scalar::from_int(mx) / &s));
            }
            if digits[i] < hi {
                digits[i] += 1;
                break;
            }
            digits[i] = lo;
            i += 1;
        }
    }
}

/// Smallest signed word width holding every integer in `[lo, hi]`.
fn signed_width(lo: &BigInt, hi: &BigInt) -> u32 {
    let mut w = 1u32;
    loop {
        let lim = BigInt::one() << (w - 1) as usize;
        if lo >= &-lim.clone() && hi <= &(lim - BigInt::one()) {
            return w;
        }
        w += 1;
    }
}

pub fn bitwidth_oracle(mode: &WinogradMode, role: Role, in_bits: u32) -> OracleResult {
    let t = transform_matrix(mode, role);
    let (lo, hi) = signed_range(in_bits);
    let n = t.rows();
    let mut all: Vec<Vec<Scalar>> = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            all.push(coefficients(t, a, b));
        }
    }
    let scale = all.iter().flatten().filter(|c| !c.is_zero()).fold(BigInt::one(), |acc, c| acc.lcm(&c.denom()));

    let mut mn = Scalar::zero();
    let mut mx = Scalar::zero();
    let mut enumerated = 0;
    for coeffs in &all {
        let (emin, emax) = extremes(coeffs, lo, hi);
        if let Some((fmin, fmax)) = enumerate(coeffs, &scale, lo, hi) {
            assert_eq!((&fmin, &fmax), (&emin, &emax), "enumeration disagrees with coordinate extremes");
            enumerated += 1;
        }
        mn = mn.min(emin);
        mx = mx.max(emax);
    }

    let frac_bits = ceil_log2_int(&scale);
    let width = signed_width(&mn.scale_pow2(frac_bits as i32).floor(), &mx.scale_pow2(frac_bits as i32).ceil());
    OracleResult {
        min: mn,
        max: mx,
        frac_bits,
        width,
        growth: width as i64 - in_bits as i64,
        enumerated_entries: enumerated,
        total_entries: all.len(),
    }
}

/// Growth printed in the published bit-width table, when listed.
pub fn published_growth(omega: usize, k: usize, role: Role) -> Option<i64> {
    match (omega, k, role) {
        (4, 1, Role::Weight) => Some(2),
        (4, 1, Role::Input) => Some(4),
        (4, 3, Role::Weight) => Some(4),
        (4, 3, Role::Input) => Some(4),
        (6, 3, Role::Weight) => Some(8),
        (6, 3, Role::Input) => Some(10),
        (6, 5, Role::Weight) => Some(8),
        (6, 5, Role::Input) => Some(10),
        _ => None,
    }
}

pub fn bitwidth_report(mode: &WinogradMode, role: Role, in_bits: u32) -> BitwidthReport {
    BitwidthReport {
        mode: mode.label(),
        role,
        in_bits,
        analytic: bitwidth_growth(mode, role, in_bits),
        oracle: bitwidth_oracle(mode, role, in_bits),
        published: published_growth(mode.omega(), mode.k(), role),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::make_mode;

    #[test]
    fn analytic_values() {
        let cases = [
            ((4, 1), Role::Weight, 2),
            ((4, 3), Role::Weight, 4),
            ((4, 1), Role::Input, 2),
            ((4, 3), Role::Input, 2),
            ((6, 3), Role::Input, 8),
            ((6, 3), Role::Weight, 10),
            ((6, 5), Role::Weight, 12),
        ];
        for ((w, k), role, want) in cases {
            let mode = make_mode(w, k).unwrap();
            assert_eq!(bitwidth_growth(&mode, role, 8), want, "{} {role}", mode.label());
        }
    }

    #[test]
    fn scalar_weight_oracle_by_full_enumeration() {
        let mode = make_mode(4, 1).unwrap();
        let o = bitwidth_oracle(&mode, Role::Weight, 4);
        assert_eq!(o.enumerated_entries, o.total_entries);
        assert_eq!((o.min.clone(), o.max.clone()), (Scalar::from_int(-8), Scalar::from_int(7)));
        assert_eq!(o.frac_bits, 2);
        // [-32, 28] fits 6 signed bits.
        assert_eq!((o.width, o.growth), (6, 2));
    }

    #[test]
    fn zero_tile_is_exact_at_any_width() {
        let mode = make_mode(6, 3).unwrap();
        let u = mode.transform_input(&Matrix::zeros(6, 6)).unwrap();
        assert!(u.data().iter().all(|v| v.is_zero() && v.is_integer()));
    }

    #[test]
    fn signed_width_edges() {
        assert_eq!(signed_width(&BigInt::from(-8), &BigInt::from(7)), 4);
        assert_eq!(signed_width(&BigInt::from(-8), &BigInt::from(8)), 5);
        assert_eq!(signed_width(&BigInt::from(0), &BigInt::from(0)), 1);
    }
}
