//! Haar-distributed k-frames in ℝ^n and projection of ball vectors.
//!
//! A frame is a `k × n` matrix `V` with orthonormal rows. Sampling uses the
//! polar factor of a Gaussian matrix, `V = (G Gᵀ)^{-1/2} G`, which is
//! equivariant under `G ↦ O G O'` and therefore Haar without any sign fixing.

use crate::distcore::RandomStream;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix, SymEigen};
use crate::pball::BallVector;

/// Sampled frames must satisfy `max |VVᵀ − I| ≤` this.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StiefelFrame {
    rows: Matrix,
}

impl StiefelFrame {
    /// Wraps a `k × n` matrix without checking orthonormality; use
    /// [`orthonormality_defect`] to validate.
    pub fn from_matrix(rows: Matrix) -> Result<Self> {
        if rows.rows() < 1 || rows.rows() > rows.cols() {
            return Err(Error::param(format!(
                "frame must have 1 <= k <= n, got {}x{}",
                rows.rows(),
                rows.cols()
            )));
        }
        Ok(StiefelFrame { rows })
    }

    /// The frame whose rows are `e_1ᵀ, …, e_kᵀ`.
    pub fn coordinate(n: usize, k: usize) -> Result<Self> {
        check_dims(n, k)?;
        let mut m = Matrix::zeros(k, n);
        for i in 0..k {
            m[(i, i)] = 1.0;
        }
        Ok(StiefelFrame { rows: m })
    }

    pub fn k(&self) -> usize {
        self.rows.rows()
    }

    pub fn n(&self) -> usize {
        self.rows.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.rows.row(i)
    }

    /// `V x` into a caller buffer of length `k`.
    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.rows.matvec(x, out)
    }

    /// `O V O'` for square `O` (k×k, left) and `O'` (n×n, right).
    pub fn rotate(&self, left: Option<&Matrix>, right: Option<&Matrix>) -> Result<Self> {
        let mut m = self.rows.clone();
        if let Some(o) = left {
            if o.rows() != self.k() || o.cols() != self.k() {
                return Err(Error::param("left rotation must be k x k"));
            }
            m = o.matmul(&m);
        }
        if let Some(o) = right {
            if o.rows() != self.n() || o.cols() != self.n() {
                return Err(Error::param("right rotation must be n x n"));
            }
            m = m.matmul(o);
        }
        Ok(StiefelFrame { rows: m })
    }
}

fn check_dims(n: usize, k: usize) -> Result<()> {
    if k < 1 || k > n {
        return Err(Error::param(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    Ok(())
}

/// Haar draw on `V_{n,k}`.
pub fn sample_stiefel(n: usize, k: usize, rng: &mut RandomStream) -> Result<StiefelFrame> {
    check_dims(n, k)?;
    let mut g = Matrix::zeros(k, n);
    for i in 0..k {
        for x in g.row_mut(i) {
            *x = rng.normal();
        }
    }
    polar_rows(&g).map(|rows| StiefelFrame { rows })
}

/// `(G Gᵀ)^{-1/2} G`.
pub fn polar_rows(g: &Matrix) -> Result<Matrix> {
    let eig = SymEigen::new(&g.gram())?;
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > hi * 1e-14 && lo > 0.0) {
        return Err(Error::Internal(format!(
            "Gram matrix numerically singular (eigenvalues {lo:e}..{hi:e})"
        )));
    }
    let inv_sqrt = eig.apply(|l| 1.0 / l.sqrt());
    let mut v = inv_sqrt.matmul(g);
    // one Newton–Schulz step, V ← (3V − V VᵀV)/2, polishes round-off
    let corr = v.gram().matmul(&v);
    for i in 0..v.rows() {
        for j in 0..v.cols() {
            v[(i, j)] = 1.5 * v[(i, j)] - 0.5 * corr[(i, j)];
        }
    }
    Ok(v)
}

/// `V x`.
pub fn project(v: &StiefelFrame, x: &BallVector) -> Result<Vec<f64>> {
    project_slice(v, x.coords())
}

pub fn project_slice(v: &StiefelFrame, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != v.n() {
        return Err(Error::param(format!(
            "vector has dimension {}, frame expects {}",
            x.len(),
            v.n()
        )));
    }
    let mut out = vec![0.0; v.k()];
    v.apply(x, &mut out);
    Ok(out)
}

/// `max_{ij} |(VVᵀ − I)_{ij}|`.
pub fn orthonormality_defect(v: &StiefelFrame) -> f64 {
    let k = v.k();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in i..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(v.row(i), v.row(j)) - target).abs());
        }
    }
    worst
}
