//! Exact rational scalar used everywhere in the functional datapath.
//!
//! Values live in a machine-word `Ratio<i64>` while they fit and transparently
//! promote to an arbitrary-precision `BigRational` on overflow, so arithmetic
//! is always exact. The representation is canonical: a value that fits the
//! small form is never stored big, which keeps derived equality and hashing
//! value-based.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Small(Ratio<i64>),
    Big(BigRational),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scalar(Repr);

fn big(r: &Ratio<i64>) -> BigRational {
    BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar(Repr::Small(Ratio::from_integer(0)))
    }

    pub fn one() -> Self {
        Scalar(Repr::Small(Ratio::from_integer(1)))
    }

    pub fn from_int(v: i64) -> Self {
        Scalar(Repr::Small(Ratio::from_integer(v)))
    }

    /// `numer / denom`, reduced. Panics on a zero denominator.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Scalar(Repr::Small(Ratio::new(numer, denom)))
    }

    fn from_big(v: BigRational) -> Self {
        match (v.numer().to_i64(), v.denom().to_i64()) {
            // i64::MIN cannot be negated inside Ratio's normalisation; keep it big.
            (Some(n), Some(d)) if n != i64::MIN && d != i64::MIN => Scalar(Repr::Small(Ratio::new_raw(n, d))),
            _ => Scalar(Repr::Big(v)),
        }
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(r) => big(r),
            Repr::Big(b) => b.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_zero(),
            Repr::Big(b) => b.is_zero(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_integer(),
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_negative(),
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn abs(&self) -> Scalar {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(*r.numer()),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(*r.denom()),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    /// The value as an `i64` when it is an integer that fits.
    pub fn to_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small(r) if r.is_integer() => Some(*r.numer()),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(r) => *r.numer() as f64 / *r.denom() as f64,
            Repr::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Largest integer not greater than the value.
    pub fn floor(&self) -> BigInt {
        self.to_big().floor().to_integer()
    }

    /// Smallest integer not less than the value.
    pub fn ceil(&self) -> BigInt {
        self.to_big().ceil().to_integer()
    }

    /// Multiply by `2^shift` (shift may be negative).
    pub fn scale_pow2(&self, shift: i32) -> Scalar {
        let factor = BigInt::one() << shift.unsigned_abs();
        let b = self.to_big();
        if shift >= 0 {
            Scalar::from_big(b * BigRational::from_integer(factor))
        } else {
            Scalar::from_big(b / BigRational::from_integer(factor))
        }
    }

    pub fn from_bigint(v: BigInt) -> Scalar {
        Scalar::from_big(BigRational::from_integer(v))
    }

    pub fn recip(&self) -> Scalar {
        assert!(!self.is_zero(), "reciprocal of zero");
        match &self.0 {
            Repr::Small(r) if *r.numer() != i64::MIN => Scalar(Repr::Small(r.recip())),
            _ => Scalar::from_big(self.to_big().recip()),
        }
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::from_int(v)
    }
}

impl From<i32> for Scalar {
    fn from(v: i32) -> Self {
        Scalar::from_int(v as i64)
    }
}

impl Zero for Scalar {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
}

impl One for Scalar {
    fn one() -> Self {
        Scalar::one()
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl<'a> $trait<&'a Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
                    if a.is_integer() && b.is_integer() {
                        if let Some(v) = a.numer().$checked(b.numer()).filter(|&v| v != i64::MIN) {
                            return Scalar(Repr::Small(Ratio::from_integer(v)));
                        }
                    }
                    if let Some(v) = a.$checked(b) {
                        return Scalar(Repr::Small(v));
                    }
                }
                Scalar::from_big(self.to_big().$method(rhs.to_big()))
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $trait<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl<'a> Div<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &'a Scalar) -> Scalar {
        self * &rhs.recip()
    }
}

impl Div<Scalar> for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        &self / &rhs
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match &self.0 {
            Repr::Small(r) if *r.numer() != i64::MIN => Scalar(Repr::Small(-*r)),
            _ => Scalar::from_big(-self.to_big()),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        if let (Repr::Small(a), Repr::Small(b)) = (&mut self.0, &rhs.0) {
            if a.is_integer() && b.is_integer() {
                if let Some(v) = a.numer().checked_add(b.numer()).filter(|&v| v != i64::MIN) {
                    *a = Ratio::from_integer(v);
                    return;
                }
            }
            if let Some(v) = a.checked_add(b) {
                *a = v;
                return;
            }
        }
        *self = &*self + rhs;
    }
}

impl AddAssign<Scalar> for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        *self += &rhs;
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |mut acc, x| {
            acc += &x;
            acc
        })
    }
}

impl<'a> Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |mut acc, x| {
            acc += x;
            acc
        })
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a.cmp(b),
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(r) => write!(f, "{}", r),
            Repr::Big(b) => write!(f, "{}", b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseScalarError(pub String);

impl FromStr for Scalar {
    type Err = ParseScalarError;

    /// Accepts `n` or `n/d` with arbitrary-size integers.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseScalarError(s.to_string());
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| err())?;
        let d: BigInt = d.parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        Ok(Scalar::from_big(BigRational::new(n, d)))
    }
}

impl serde::Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
