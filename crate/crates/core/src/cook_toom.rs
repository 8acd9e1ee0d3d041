//! Cook–Toom construction of Winograd transform matrices.
//!
//! For `F(m, r)` with `n = m + r - 1` interpolation points, the caller supplies
//! `n - 1` distinct finite points; the point at infinity is always appended.
//! The linear-convolution form `s = C[(G g) ⊙ (A x)]` is built from Lagrange
//! interpolation and then transposed into the correlation form
//! `y = Aᵀ[(G g) ⊙ (Bᵀ d)]` with `Bᵀ = Cᵀ`.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CookToom {
    pub bt: Matrix,
    pub g: Matrix,
    pub at: Matrix,
}

fn poly_mul_linear(poly: &[Scalar], root: &Scalar) -> Vec<Scalar> {
    // (x - root) * poly, ascending coefficients
    let mut out = vec![Scalar::zero(); poly.len() + 1];
    for (i, c) in poly.iter().enumerate() {
        out[i + 1] += c;
        out[i] += &-(c * root);
    }
    out
}

fn pow(base: &Scalar, exp: usize) -> Scalar {
    (0..exp).fold(Scalar::one(), |acc, _| &acc * base)
}

pub fn cook_toom(points: &[Scalar], m: usize, r: usize) -> Result<CookToom> {
    if m == 0 || r == 0 {
        return Err(Error::Config("Cook-Toom needs m, r >= 1".into()));
    }
    let n = m + r - 1;
    if points.len() != n - 1 {
        return Err(Error::Config(format!("F({m},{r}) needs {} finite points, got {}", n - 1, points.len())));
    }
    for i in 0..points.len() {
        for j in 0..i {
            if points[i] == points[j] {
                return Err(Error::Config(format!("duplicate point {}", points[i])));
            }
        }
    }

    let mut g = Matrix::zeros(n, r);
    let mut at = Matrix::zeros(m, n);
    let mut bt = Matrix::zeros(n, n);

    for (j, a) in points.iter().enumerate() {
        let f: Scalar =
            points.iter().enumerate().filter(|&(l, _)| l != j).fold(Scalar::one(), |acc, (_, b)| &acc * &(a - b));
        let inv = f.recip();
        for t in 0..r {
            g.set(j, t, &pow(a, t) * &inv);
        }
        for i in 0..m {
            at.set(i, j, pow(a, i));
        }
        let mut basis = vec![Scalar::one()];
        for (l, b) in points.iter().enumerate() {
            if l != j {
                basis = poly_mul_linear(&basis, b);
            }
        }
        for (p, c) in basis.into_iter().enumerate() {
            bt.set(j, p, c);
        }
    }

    g.set(n - 1, r - 1, Scalar::one());
    at.set(m - 1, n - 1, Scalar::one());
    let mut full = vec![Scalar::one()];
    for b in points {
        full = poly_mul_linear(&full, b);
    }
    for (p, c) in full.into_iter().enumerate() {
        bt.set(n - 1, p, c);
    }

    Ok(CookToom { bt, g, at })
}

/// Points `0, 1, -1, 2, -2, ...` (the usual small-magnitude choice).
pub fn default_points(count: usize) -> Vec<Scalar> {
    let mut pts = vec![Scalar::zero()];
    let mut k = 1;
    while pts.len() < count {
        pts.push(Scalar::from_int(k));
        if pts.len() < count {
            pts.push(Scalar::from_int(-k));
        }
        k += 1;
    }
    pts.truncate(count);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn correlate_1d(ct: &CookToom, d: &[i64], g: &[i64]) -> Vec<Scalar> {
        let dv = Matrix::from_i64_rows(&[d]).transpose();
        let gv = Matrix::from_i64_rows(&[g]).transpose();
        let u = ct.bt.matmul(&dv).unwrap();
        let v = ct.g.matmul(&gv).unwrap();
        ct.at.matmul(&u.hadamard(&v).unwrap()).unwrap().into_data()
    }

    #[test]
    fn f43_matches_well_known_input_transform() {
        let ct = cook_toom(&default_points(5), 4, 3).unwrap();
        let expected = Matrix::from_i64_rows(&[
            &[4, 0, -5, 0, 1, 0],
            &[0, -4, -4, 1, 1, 0],
            &[0, 4, -4, -1, 1, 0],
            &[0, -2, -1, 2, 1, 0],
            &[0, 2, -1, -2, 1, 0],
            &[0, 4, 0, -5, 0, 1],
        ]);
        assert_eq!(ct.bt, expected);
        assert_eq!(*ct.g.get(0, 0), Scalar::ratio(1, 4));
        assert_eq!(*ct.g.get(1, 2), Scalar::ratio(-1, 6));
        assert_eq!(*ct.g.get(3, 0), Scalar::ratio(1, 24));
    }

    #[test]
    fn one_dimensional_identity_for_several_sizes() {
        for (m, r) in [(2, 3), (4, 1), (4, 3), (2, 5), (6, 1), (3, 2)] {
            let n = m + r - 1;
            let ct = cook_toom(&default_points(n - 1), m, r).unwrap();
            let d: Vec<i64> = (0..n as i64).map(|i| 3 * i - 5).collect();
            let g: Vec<i64> = (0..r as i64).map(|i| 2 - i * i).collect();
            let y = correlate_1d(&ct, &d, &g);
            for (i, yi) in y.iter().enumerate() {
                let direct: i64 = (0..r).map(|t| d[i + t] * g[t]).sum();
                assert_eq!(*yi, Scalar::from_int(direct), "F({m},{r}) output {i}");
            }
        }
    }

    #[test]
    fn rejects_bad_point_sets() {
        assert!(cook_toom(&default_points(3), 2, 3).is_ok());
        assert!(cook_toom(&default_points(4), 2, 3).is_err());
        let dup = vec![Scalar::one(), Scalar::one()];
        assert!(cook_toom(&dup, 2, 2).is_err());
    }
}
