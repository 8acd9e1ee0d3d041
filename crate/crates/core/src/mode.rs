//! Kernel-sharing Winograd modes.
//!
//! All modes with the same filter size ω share one input transform `Bᵀ`; the
//! kernel and output transforms `G`/`Aᵀ` differ only in a few selection-bit
//! entries, which are substituted here once, when the mode is built. Nothing
//! downstream branches on the kernel size.

use serde::Serialize;

use crate::cook_toom::{cook_toom, default_points};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Filter sizes with a shared datapath.
pub const SUPPORTED_OMEGAS: [usize; 2] = [4, 6];

/// Kernel sides supported natively for a filter size.
pub fn supported_kernels(omega: usize) -> &'static [usize] {
    match omega {
        4 => &[1, 3],
        6 => &[1, 3, 5],
        _ => &[],
    }
}

/// Values substituted for the selection bits of `G` and `Aᵀ`.
///
/// F4 has one bit per matrix (`s`); F6 has three (`s0 s1 s2`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SelectionBits {
    pub g: Vec<i64>,
    pub a: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WinogradMode {
    omega: usize,
    m: usize,
    k: usize,
    bt: Matrix,
    b: Matrix,
    g: Matrix,
    gt: Matrix,
    at: Matrix,
    a: Matrix,
    bits: SelectionBits,
}

fn r(n: i64, d: i64) -> Scalar {
    Scalar::ratio(n, d)
}

fn i(v: i64) -> Scalar {
    Scalar::from_int(v)
}

/// Input transform shared by F4(4x4,1x1) and F4(2x2,3x3).
fn bt4() -> Matrix {
    Matrix::from_i64_rows(&[&[1, 0, -1, 0], &[0, 1, 1, 0], &[0, -1, 1, 0], &[0, -1, 0, 1]])
}

fn g4(s: i64) -> Matrix {
    Matrix::from_rows(vec![
        vec![i(1), i(0), i(0)],
        vec![r(1, 2), r(1, 2), r(1, 2)],
        vec![r(1, 2), r(-1, 2), r(1, 2)],
        vec![i(s), i(0), i(1)],
    ])
}

fn at4(s: i64) -> Matrix {
    Matrix::from_i64_rows(&[&[1, 1, 1, 0], &[0, 1, -1, s], &[0, 1, 1, 0], &[0, 1, -1, 1]])
}

fn g6(s: [i64; 3]) -> Matrix {
    Matrix::from_rows(vec![
        vec![r(1, 4), i(0), i(0), i(0), i(0)],
        vec![r(-1, 6), r(-1, 6), r(-1, 6), r(-1, 6), r(-1, 6)],
        vec![r(-1, 6), r(1, 6), r(-1, 6), r(1, 6), r(-1, 6)],
        vec![r(1, 24), r(1, 12), r(1, 6), r(1, 3), r(2, 3)],
        vec![r(1, 24), r(-1, 12), r(1, 6), r(-1, 3), r(2, 3)],
        vec![i(s[0]), i(0), i(s[1]), i(0), i(s[2])],
    ])
}

fn at6(s: [i64; 3]) -> Matrix {
    Matrix::from_i64_rows(&[
        &[1, 1, 1, 1, 1, 0],
        &[0, 1, -1, 2, -2, s[0]],
        &[0, 1, 1, 4, 4, 0],
        &[0, 1, -1, 8, -8, s[1]],
        &[0, 1, 1, 16, 16, 0],
        &[0, 1, -1, 32, -32, s[2]],
    ])
}

/// `Bᵀ` for ω = 6, generated with Cook–Toom over the points 0, ±1, ±2, ∞.
fn bt6() -> Matrix {
    cook_toom(&default_points(5), 4, 3).expect("F(4,3) construction").bt
}

/// The shared-datapath matrices for a filter size, before truncation to a
/// particular kernel: `(Bᵀ, G(bits), Aᵀ(bits))`.
pub fn shared_matrices(omega: usize, bits: &SelectionBits) -> Result<(Matrix, Matrix, Matrix)> {
    match (omega, bits.g.as_slice(), bits.a.as_slice()) {
        (4, &[sg], &[sa]) => Ok((bt4(), g4(sg), at4(sa))),
        (6, &[g0, g1, g2], &[a0, a1, a2]) => Ok((bt6(), g6([g0, g1, g2]), at6([a0, a1, a2]))),
        _ => Err(Error::Config(format!("no shared matrices for omega={omega} with bits {bits:?}"))),
    }
}

/// Selection bits for a supported `(ω, k)` pair.
pub fn selection_bits(omega: usize, k: usize) -> Result<SelectionBits> {
    let bits = match (omega, k) {
        (4, 1) => SelectionBits { g: vec![1], a: vec![0] },
        // The printed figure shows s = -1 here, which contradicts its own Bᵀ;
        // +1 is the Cook–Toom value for that input transform.
        (4, 3) => SelectionBits { g: vec![0], a: vec![1] },
        (6, 1) => SelectionBits { g: vec![1, 0, 0], a: vec![0, 0, 1] },
        (6, 3) => SelectionBits { g: vec![0, 1, 0], a: vec![0, 1, 0] },
        (6, 5) => SelectionBits { g: vec![0, 0, 1], a: vec![1, 0, 0] },
        _ => return Err(Error::Config(format!("unsupported Winograd mode omega={omega}, k={k}"))),
    };
    Ok(bits)
}

impl WinogradMode {
    pub fn omega(&self) -> usize {
        self.omega
    }

    /// Output tile side.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Kernel side.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bt(&self) -> &Matrix {
        &self.bt
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    pub fn at(&self) -> &Matrix {
        &self.at
    }

    pub fn selection_bits(&self) -> &SelectionBits {
        &self.bits
    }

    pub fn label(&self) -> String {
        format!("F{}({}x{},{}x{})", self.omega, self.m, self.m, self.k, self.k)
    }

    /// `U = Bᵀ d B`.
    pub fn transform_input(&self, d: &Matrix) -> Result<Matrix> {
        self.expect_shape("input tile", d, self.omega, self.omega)?;
        self.bt.matmul(d)?.matmul(&self.b)
    }

    /// `V = G g Gᵀ`.
    pub fn transform_kernel(&self, g: &Matrix) -> Result<Matrix> {
        self.expect_shape("kernel", g, self.k, self.k)?;
        self.g.matmul(g)?.matmul(&self.gt)
    }

    /// `Y = Aᵀ E A`.
    pub fn transform_output(&self, e: &Matrix) -> Result<Matrix> {
        self.expect_shape("element-wise product", e, self.omega, self.omega)?;
        self.at.matmul(e)?.matmul(&self.a)
    }

    /// One output tile: `Aᵀ((Bᵀ d B) ⊙ (G g Gᵀ))A`.
    pub fn tile_convolve(&self, d: &Matrix, g: &Matrix) -> Result<Matrix> {
        let u = self.transform_input(d)?;
        let v = self.transform_kernel(g)?;
        self.transform_output(&u.hadamard(&v)?)
    }

    fn expect_shape(&self, what: &str, x: &Matrix, rows: usize, cols: usize) -> Result<()> {
        if x.shape() != (rows, cols) {
            return Err(Error::Shape(format!(
                "{what} for {} must be {rows}x{cols}, got {}x{}",
                self.label(),
                x.rows(),
                x.cols()
            )));
        }
        Ok(())
    }
}

/// Build the mode `F_ω(m×m, k×k)` with its selection bits substituted.
pub fn make_mode(omega: usize, k: usize) -> Result<WinogradMode> {
    let bits = selection_bits(omega, k)?;
    let (bt, g_full, at_full) = shared_matrices(omega, &bits)?;
    let m = omega + 1 - k;
    let g = g_full.top_left(omega, k);
    let at = at_full.top_left(m, omega);
    Ok(WinogradMode { omega, m, k, b: bt.transpose(), gt: g.transpose(), a: at.transpose(), bt, g, at, bits })
}

/// Every supported mode, in (ω, k) order.
pub fn all_modes() -> Vec<WinogradMode> {
    SUPPORTED_OMEGAS
        .iter()
        .flat_map(|&w| supported_kernels(w).iter().map(move |&k| make_mode(w, k).expect("supported")))
        .collect()
}

/// Multiplications saved per output tile: `m²k² / ω²`.
pub fn multiplication_reduction_ratio(mode: &WinogradMode) -> Scalar {
    let (m, k, w) = (mode.m as i64, mode.k as i64, mode.omega as i64);
    Scalar::ratio(m * m * k * k, w * w)
}
