//! Dense row-major `f64` matrices and the few factorizations the solvers
//! need: a one-sided Jacobi SVD (for pseudoinverses and minimum-norm least
//! squares) and a Cholesky factorization.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Singular values at or below this fraction of the largest one are treated
/// as zero by [`Matrix::pinv`] and [`Matrix::least_squares`].
pub const PINV_RCOND: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 80;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "Matrix::from_vec",
                expected: alloc::format!("{} entries", rows * cols),
                found: alloc::format!("{} entries", data.len()),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::mismatch("Matrix::from_rows", (i, cols), (i, r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::mismatch(
                "matmul",
                (self.cols, rhs.cols),
                (rhs.rows, rhs.cols),
            ));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let lhs_row = self.row(i);
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (l, &a) in lhs_row.iter().enumerate() {
                let rhs_row = rhs.row(l);
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        self.row_iter().map(|r| dot(r, v)).collect()
    }

    /// `self^T * v` without forming the transpose.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &vi) in self.row_iter().zip(v) {
            for (o, &a) in out.iter_mut().zip(r) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// Squared Frobenius norm of `self - other`.
    pub fn dist_sq(&self, other: &Matrix) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::mismatch("dist_sq", self.shape(), other.shape()));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|x| x * s)
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)])
    }

    /// Appends one row at the bottom.
    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "push_row: width mismatch");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    /// Position of the first non-finite entry, if any.
    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|x| !x.is_finite())
            .map(|p| (p / self.cols, p % self.cols))
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s = Svd::of(self).sigma;
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Moore-Penrose pseudoinverse.
    ///
    /// Singular values at or below `PINV_RCOND * sigma_max` are dropped.
    pub fn pinv(&self) -> Matrix {
        Svd::of(self).pinv()
    }

    /// Minimum-norm least-squares solution of `self * x = b`.
    pub fn least_squares(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.rows);
        self.pinv().mul_vec(b)
    }

    /// Lower-triangular `L` with `L * L^T = self`, or `None` when the matrix
    /// is not symmetric positive definite.
    pub fn cholesky(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for p in 0..j {
                d -= l[(j, p)] * l[(j, p)];
            }
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            let d = libm::sqrt(d);
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for p in 0..j {
                    s -= l[(i, p)] * l[(j, p)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in self.row_iter() {
            writeln!(f, "  {:?}", r)?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Thin SVD by one-sided Jacobi rotations.
///
/// For a tall input `A` (rows >= cols) the columns of `A V` are
/// orthogonalized in place: `work` ends up as `U * diag(sigma)`. Wide inputs
/// are handled through the transpose.
struct Svd {
    transposed: bool,
    /// `U * diag(sigma)`, tall, stored column-major as separate vectors.
    work: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    sigma: Vec<f64>,
}

impl Svd {
    fn of(a: &Matrix) -> Svd {
        let transposed = a.rows < a.cols;
        let (p, q) = if transposed {
            (a.cols, a.rows)
        } else {
            (a.rows, a.cols)
        };
        let mut work: Vec<Vec<f64>> = (0..q)
            .map(|j| {
                (0..p)
                    .map(|i| if transposed { a[(j, i)] } else { a[(i, j)] })
                    .collect()
            })
            .collect();
        let mut v: Vec<Vec<f64>> = (0..q)
            .map(|j| {
                let mut e = vec![0.0; q];
                e[j] = 1.0;
                e
            })
            .collect();

        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut rotated = false;
            for i in 0..q {
                for j in i + 1..q {
                    let alpha = dot(&work[i], &work[i]);
                    let beta = dot(&work[j], &work[j]);
                    let gamma = dot(&work[i], &work[j]);
                    if gamma == 0.0 || gamma.abs() <= f64::EPSILON * libm::sqrt(alpha * beta) {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                    let cs = 1.0 / libm::sqrt(1.0 + t * t);
                    let sn = cs * t;
                    rotate(&mut work, i, j, cs, sn);
                    rotate(&mut v, i, j, cs, sn);
                }
            }
            if !rotated {
                break;
            }
        }

        let sigma = work.iter().map(|c| norm(c)).collect();
        Svd {
            transposed,
            work,
            v,
            sigma,
        }
    }

    fn pinv(&self) -> Matrix {
        let q = self.v.len();
        let p = self.work.first().map_or(0, Vec::len);
        let smax = self.sigma.iter().copied().fold(0.0, f64::max);
        let cutoff = PINV_RCOND * smax;
        // pinv(A) = V diag(1/sigma) U^T = sum_i v_i (work_i / sigma_i^2)^T, a q x p matrix
        let mut out = Matrix::zeros(q, p);
        for (i, &s) in self.sigma.iter().enumerate() {
            if s <= cutoff || s == 0.0 {
                continue;
            }
            let inv_sq = 1.0 / (s * s);
            for a in 0..q {
                let va = self.v[i][a];
                if va == 0.0 {
                    continue;
                }
                let row = out.row_mut(a);
                for (o, &w) in row.iter_mut().zip(&self.work[i]) {
                    *o += va * (w * inv_sq);
                }
            }
        }
        if self.transposed {
            out.transpose()
        } else {
            out
        }
    }
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, cs: f64, sn: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    let (ci, cj) = (&mut lo[i], &mut hi[0]);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = cs * a - sn * b;
        *y = sn * a + cs * b;
    }
}
