//! Under-determined linear least squares `f(x) = ½|Ax - b|²`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, DVectorView};
use serde::{Deserialize, Serialize};

use super::rng::{derive_seed, SeededRng};
use crate::error::{Error, Result};
use crate::problem::Problem;

/// Random matrix families for the least-squares test set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LsKind {
    /// i.i.d. standard normal entries.
    A1,
    /// First `m` rows of a Haar-random `n x n` orthogonal matrix.
    A2,
    /// `Q G` with `Q` a random `m x m` orthogonal matrix and `G` Gaussian.
    A3,
    /// Transposed thin-QR factor of a Gaussian `n x m` matrix.
    A4,
    /// i.i.d. Bernoulli(1/2) entries in {0, 1}.
    A5,
    /// `m` distinct rows of the orthonormal `n x n` DCT-II matrix.
    A6,
}

impl LsKind {
    pub const ALL: [LsKind; 6] = [
        LsKind::A1,
        LsKind::A2,
        LsKind::A3,
        LsKind::A4,
        LsKind::A5,
        LsKind::A6,
    ];

    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for LsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for LsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A1" => Ok(LsKind::A1),
            "A2" => Ok(LsKind::A2),
            "A3" => Ok(LsKind::A3),
            "A4" => Ok(LsKind::A4),
            "A5" => Ok(LsKind::A5),
            "A6" => Ok(LsKind::A6),
            other => Err(Error::contract(format!("unknown matrix kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LeastSquaresProblem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    lipschitz: f64,
    /// The generating solution, when known.
    solution: Option<Vec<f64>>,
}

impl LeastSquaresProblem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::contract(format!(
                "matrix has {} rows but right-hand side has length {}",
                a.nrows(),
                b.len()
            )));
        }
        let lipschitz = largest_gram_eigenvalue(&a);
        Ok(LeastSquaresProblem {
            a,
            b,
            lipschitz,
            solution: None,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn solution(&self) -> Option<&[f64]> {
        self.solution.as_deref()
    }

    fn residual(&self, x: &[f64]) -> DVector<f64> {
        let xv = DVectorView::from_slice(x, self.a.ncols());
        &self.a * xv - &self.b
    }
}

impl Problem for LeastSquaresProblem {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        0.5 * self.residual(x).norm_squared()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let g = self.a.tr_mul(&self.residual(x));
        out.copy_from_slice(g.as_slice());
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

/// Largest eigenvalue of `AᵀA`, computed on the smaller Gram matrix.
pub fn largest_gram_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let gram = if a.nrows() <= a.ncols() {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    if gram.is_empty() {
        return 0.0;
    }
    gram.symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v))
}

/// Orthonormal DCT-II matrix: row `k`, column `j` is
/// `c_k cos(pi (2j+1) k / (2n))` with `c_0 = sqrt(1/n)`, `c_k = sqrt(2/n)`.
pub fn dct2_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |k, j| dct2_entry(n, k, j))
}

pub fn dct2_entry(n: usize, k: usize, j: usize) -> f64 {
    let nf = n as f64;
    let c = if k == 0 {
        (1.0 / nf).sqrt()
    } else {
        (2.0 / nf).sqrt()
    };
    c * (std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf)).cos()
}

fn gaussian(rng: &mut SeededRng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Row-major fill so the draw order does not depend on storage order.
    let data: Vec<f64> = rng.normal_vec(rows * cols);
    DMatrix::from_row_slice(rows, cols, &data)
}

/// Q factor of a QR decomposition with columns sign-corrected so the
/// result is Haar distributed.
fn haar_q(g: DMatrix<f64>) -> DMatrix<f64> {
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Sorted `m` distinct row indices of `0..n`.
fn sample_rows(rng: &mut SeededRng, m: usize, n: usize) -> Vec<usize> {
    let mut rows = rng.permutation(n);
    rows.truncate(m);
    rows.sort_unstable();
    rows
}

pub fn gen_matrix(kind: LsKind, m: usize, n: usize, rng: &mut SeededRng) -> DMatrix<f64> {
    match kind {
        LsKind::A1 => gaussian(rng, m, n),
        LsKind::A2 => {
            let q = haar_q(gaussian(rng, n, n));
            q.rows(0, m).into_owned()
        }
        LsKind::A3 => {
            let q = haar_q(gaussian(rng, m, m));
            let g = gaussian(rng, m, n);
            q * g
        }
        LsKind::A4 => haar_q(gaussian(rng, n, m)).transpose(),
        LsKind::A5 => {
            let data: Vec<f64> = (0..m * n)
                .map(|_| if rng.bernoulli(0.5) { 1.0 } else { 0.0 })
                .collect();
            DMatrix::from_row_slice(m, n, &data)
        }
        LsKind::A6 => {
            let rows = sample_rows(rng, m, n);
            DMatrix::from_fn(m, n, |r, j| dct2_entry(n, rows[r], j))
        }
    }
}

/// Random under-determined least-squares instance with a noiseless
/// right-hand side `b = A x*`, `x*` standard normal.
pub fn gen_least_squares(
    kind: LsKind,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<LeastSquaresProblem> {
    if m == 0 || m >= n {
        return Err(Error::contract(format!(
            "least-squares generator needs 0 < m < n, got m = {m}, n = {n}"
        )));
    }
    let mut rng = SeededRng::new(derive_seed(&[seed, kind.stream()]));
    let a = gen_matrix(kind, m, n, &mut rng);
    let x_star = rng.normal_vec(n);
    let b = &a * DVector::from_column_slice(&x_star);
    let mut p = LeastSquaresProblem::new(a, b)?;
    p.solution = Some(x_star);
    Ok(p)
}

/// Sparse-recovery analog: `m` random DCT rows, a `nonzeros`-sparse normal
/// signal, and optional additive Gaussian noise of standard deviation
/// `noise` on the observation.
pub fn gen_sparse_recovery(
    m: usize,
    n: usize,
    nonzeros: usize,
    noise: f64,
    seed: u64,
) -> Result<LeastSquaresProblem> {
    if m == 0 || m >= n {
        return Err(Error::contract(format!(
            "sparse recovery needs 0 < m < n, got m = {m}, n = {n}"
        )));
    }
    if nonzeros == 0 || nonzeros > n {
        return Err(Error::contract("signal support must be in [1, n]"));
    }
    if !(noise >= 0.0) {
        return Err(Error::contract("noise level must be nonnegative"));
    }
    let mut rng = SeededRng::new(derive_seed(&[seed, 0x5350_4152]));
    let a = gen_matrix(LsKind::A6, m, n, &mut rng);
    let support = sample_rows(&mut rng, nonzeros, n);
    let mut x_star = vec![0.0; n];
    for i in support {
        x_star[i] = rng.normal();
    }
    let mut b = &a * DVector::from_column_slice(&x_star);
    if noise > 0.0 {
        for v in b.iter_mut() {
            *v += noise * rng.normal();
        }
    }
    let mut p = LeastSquaresProblem::new(a, b)?;
    p.solution = Some(x_star);
    Ok(p)
}
