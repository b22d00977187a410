//! Reference fixtures: the 5x5 toy matrix, two-block matrix-normal data,
//! and planted block matrices.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::restart_stream;
use crate::types::DataMatrix;

/// The 5x5 matrix holding 1..=25 in row-major order.
pub fn toy_matrix() -> DataMatrix {
    DataMatrix::new(Matrix::from_fn(5, 5, |i, j| (5 * i + j + 1) as f64))
        .expect("toy matrix is finite")
}

/// Data plus the planted row and column group of every entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub data: DataMatrix,
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
}

/// Labels splitting `len` items into `groups` contiguous, near-equal blocks.
pub fn contiguous_labels(len: usize, groups: usize) -> Vec<usize> {
    (0..len).map(|i| i * groups / len).collect()
}

/// Covariance with unit diagonal, `rho` between items of the same group
/// and zero across groups.
pub fn block_covariance(labels: &[usize], rho: f64) -> Matrix {
    let n = labels.len();
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if labels[i] == labels[j] {
            rho
        } else {
            0.0
        }
    })
}

/// Matrix-normal draw `X = L_r G L_c^T` with `G` i.i.d. standard normal and
/// `L_r L_r^T`, `L_c L_c^T` two-block covariances (the first half of the
/// rows, resp. columns, forms one block).
///
/// The row covariance of every column and the column covariance of every
/// row are then proportional to the block covariances.
pub fn simulate_block_gaussian(n: usize, m: usize, rho: f64, seed: u64) -> Result<Planted> {
    if n == 0 || m == 0 {
        return Err(Error::Empty);
    }
    if !rho.is_finite() {
        return Err(Error::InvalidRho { rho });
    }
    let row_labels = contiguous_labels(n, 2.min(n));
    let col_labels = contiguous_labels(m, 2.min(m));
    let l_r = block_covariance(&row_labels, rho)
        .cholesky()
        .ok_or(Error::InvalidRho { rho })?;
    let l_c = block_covariance(&col_labels, rho)
        .cholesky()
        .ok_or(Error::InvalidRho { rho })?;

    let mut rng = restart_stream(seed, 0);
    let g = Matrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = l_r.matmul(&g)?.matmul(&l_c.transpose())?;
    Ok(Planted {
        data: DataMatrix::new(x)?,
        row_labels,
        col_labels,
    })
}

/// `X[i, j] = values[row(i), col(j)] + N(0, sigma^2)` with contiguous,
/// near-equal row and column groups.
pub fn planted_block_matrix(
    n: usize,
    m: usize,
    values: &Matrix,
    noise_sigma: f64,
    seed: u64,
) -> Result<(DataMatrix, Vec<usize>, Vec<usize>)> {
    let (k, c) = values.shape();
    if k == 0 || c == 0 || k > n || c > m {
        return Err(Error::mismatch("planted_block_matrix", (n, m), (k, c)));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "noise sigma {noise_sigma} must be nonnegative"
        )));
    }
    let rows = contiguous_labels(n, k);
    let cols = contiguous_labels(m, c);
    let mut rng = restart_stream(seed, 0);
    let x = Matrix::from_fn(n, m, |i, j| {
        let base = values[(rows[i], cols[j])];
        if noise_sigma > 0.0 {
            base + noise_sigma * rng.sample::<f64, _>(StandardNormal)
        } else {
            base
        }
    });
    Ok((DataMatrix::new(x)?, rows, cols))
}
