//! Small dense helpers: row-major matrices and a cyclic Jacobi symmetric
//! eigensolver. Sizes here are tiny (k ≤ a few dozen), so nothing is blocked.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::param(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(l);
                for (o, &b) in out.row_mut(i).iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · selfᵀ`.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in i..self.rows {
                let s = dot(self.row(i), self.row(j));
                g[(i, j)] = s;
                g[(j, i)] = s;
            }
        }
        g
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (o, i) in out.iter_mut().zip(0..self.rows) {
            *o = dot(self.row(i), x);
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigendecomposition `A = U diag(λ) Uᵀ` of a symmetric matrix, eigenvalues
/// ascending, eigenvectors in the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEigen {
    /// Cyclic Jacobi rotations until every off-diagonal entry is negligible
    /// against its diagonal pair.
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::param("eigendecomposition needs a square matrix"));
        }
        if a.data().iter().any(|x| !x.is_finite()) {
            return Err(Error::Internal("non-finite entry in symmetric matrix".into()));
        }
        let mut m = a.clone();
        let mut v = Matrix::identity(n);
        let scale = m.data().iter().map(|x| x * x).sum::<f64>().sqrt();
        const MAX_SWEEPS: usize = 100;
        let floor = 1e-20 * scale;
        let mut converged = n < 2;
        for _ in 0..MAX_SWEEPS {
            if converged {
                break;
            }
            let mut rotated = false;
            for pi in 0..n {
                for qi in (pi + 1)..n {
                    let apq = m[(pi, qi)];
                    let app = m[(pi, pi)];
                    let aqq = m[(qi, qi)];
                    if apq.abs() <= floor.max(f64::EPSILON * 0.5 * (app.abs() + aqq.abs())) {
                        m[(pi, qi)] = 0.0;
                        m[(qi, pi)] = 0.0;
                        continue;
                    }
                    rotated = true;
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta == 0.0 {
                        1.0
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for r in 0..n {
                        let arp = m[(r, pi)];
                        let arq = m[(r, qi)];
                        m[(r, pi)] = c * arp - s * arq;
                        m[(r, qi)] = s * arp + c * arq;
                    }
                    for r in 0..n {
                        let apr = m[(pi, r)];
                        let aqr = m[(qi, r)];
                        m[(pi, r)] = c * apr - s * aqr;
                        m[(qi, r)] = s * apr + c * aqr;
                    }
                    m[(pi, qi)] = 0.0;
                    m[(qi, pi)] = 0.0;
                    m[(pi, pi)] = app - t * apq;
                    m[(qi, qi)] = aqq + t * apq;
                    for r in 0..n {
                        let vrp = v[(r, pi)];
                        let vrq = v[(r, qi)];
                        v[(r, pi)] = c * vrp - s * vrq;
                        v[(r, qi)] = s * vrp + c * vrq;
                    }
                }
            }
            converged = !rotated;
        }
        if !converged {
            return Err(Error::Internal("Jacobi iteration did not converge".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
        let values = order.iter().map(|&i| m[(i, i)]).collect();
        let mut vectors = Matrix::zeros(n, n);
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                vectors[(r, new_col)] = v[(r, old_col)];
            }
        }
        Ok(SymEigen { values, vectors })
    }

    /// `U diag(f(λ)) Uᵀ`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n)
                    .map(|c| self.vectors[(i, c)] * fl[c] * self.vectors[(j, c)])
                    .sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_reconstructs() {
        let a = Matrix::from_rows(3, 3, vec![4.0, 1.0, -2.0, 1.0, 3.0, 0.5, -2.0, 0.5, 1.0]).unwrap();
        let e = SymEigen::new(&a).unwrap();
        let back = e.apply(|l| l);
        assert!(back.max_abs_diff(&a) < 1e-13);
        let vtv = e.vectors.transpose().matmul(&e.vectors);
        assert!(vtv.max_abs_diff(&Matrix::identity(3)) < 1e-13);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn jacobi_diagonal_and_scalar() {
        let a = Matrix::from_rows(2, 2, vec![2.0, 0.0, 0.0, -1.0]).unwrap();
        let e = SymEigen::new(&a).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0]);
        let one = Matrix::from_rows(1, 1, vec![5.0]).unwrap();
        assert_eq!(SymEigen::new(&one).unwrap().values, vec![5.0]);
    }

    #[test]
    fn jacobi_converges_on_random_matrices() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = crate::distcore::splitmix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for n in [2usize, 3, 5, 12, 30] {
            for scale in [1e-8, 1.0, 1e8] {
                let mut g = Matrix::zeros(n, n + 2);
                for i in 0..n {
                    for x in g.row_mut(i) {
                        *x = scale * next();
                    }
                }
                let a = g.gram();
                let e = SymEigen::new(&a).unwrap();
                let norm = a.data().iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!(e.apply(|l| l).max_abs_diff(&a) < 1e-13 * norm);
            }
        }
        let indefinite = Matrix::from_rows(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(SymEigen::new(&indefinite).unwrap().values, vec![-1.0, 1.0]);
    }

    #[test]
    fn inverse_sqrt_squares_back() {
        let a = Matrix::from_rows(2, 2, vec![2.0, 0.3, 0.3, 1.0]).unwrap();
        let e = SymEigen::new(&a).unwrap();
        let r = e.apply(|l| 1.0 / l.sqrt());
        let should_be_id = r.matmul(&a).matmul(&r);
        assert!(should_be_id.max_abs_diff(&Matrix::identity(2)) < 1e-14);
    }
}
