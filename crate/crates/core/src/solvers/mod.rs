//! Model fitting: biarchetype analysis, archetype analysis, the closed-form
//! grand-mean model and the hard double k-means baseline.

mod aa;
mod biaa;
mod dkmeans;

pub use aa::{fit_aa, fit_aa_from, fit_aa_restart};
pub use biaa::{
    fit_biaa, fit_biaa_from, fit_biaa_restart, select_best, BiaaRun, ColumnSide, Factors,
    MembershipStep,
};
pub use dkmeans::{fit_double_kmeans, DoubleKMeansModel};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::simplex_ls::solve_simplex_ls_rows;
use crate::types::{Axis, BiaaModel, DataMatrix, FitConfig, StochasticMatrix};

/// Consecutive stalled iterations that end a run.
pub const STALL_WINDOW: usize = 10;

/// Rows (or columns) of `Z` closer than this are reported as collapsed.
pub const COLLAPSE_TOL: f64 = 1e-8;

/// `|X - alpha Z gamma|^2`.
pub fn rss(
    x: &DataMatrix,
    alpha: &StochasticMatrix,
    z: &Matrix,
    gamma: &StochasticMatrix,
) -> Result<f64> {
    let (n, m) = (x.n(), x.m());
    let (k, c) = z.shape();
    check_shape("rss: alpha", alpha.values(), (n, k))?;
    check_shape("rss: gamma", gamma.values(), (c, m))?;
    rss_unchecked(x.values(), alpha.values(), z, gamma.values())
}

pub(crate) fn rss_unchecked(x: &Matrix, alpha: &Matrix, z: &Matrix, gamma: &Matrix) -> Result<f64> {
    let recon = alpha.matmul(z)?.matmul(gamma)?;
    recon.dist_sq(x)
}

pub(crate) fn add(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!(a.shape(), b.shape());
    Matrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] + b[(i, j)])
}

pub(crate) fn sub(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!(a.shape(), b.shape());
    Matrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] - b[(i, j)])
}

pub(crate) fn check_shape(context: &'static str, m: &Matrix, expected: (usize, usize)) -> Result<()> {
    if m.shape() != expected {
        return Err(Error::mismatch(context, expected, m.shape()));
    }
    Ok(())
}

/// `alpha * Z * gamma`.
pub fn reconstruct(model: &BiaaModel) -> Matrix {
    model
        .alpha
        .values()
        .matmul(&model.z)
        .and_then(|az| az.matmul(model.gamma.values()))
        .expect("fitted model has consistent factor shapes")
}

/// Closed-form model with one row and one column archetype: `Z` is the
/// mean of all entries.
pub fn grand_mean_model(x: &DataMatrix) -> BiaaModel {
    let (n, m) = (x.n(), x.m());
    let alpha = StochasticMatrix::uniform(n, 1, Axis::Rows);
    let beta = StochasticMatrix::uniform(1, n, Axis::Rows);
    let theta = StochasticMatrix::uniform(m, 1, Axis::Columns);
    let gamma = StochasticMatrix::uniform(1, m, Axis::Columns);
    let mean = x.values().as_slice().iter().sum::<f64>() / (n * m) as f64;
    let rss = x
        .values()
        .as_slice()
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum();
    BiaaModel {
        alpha,
        beta,
        theta,
        gamma,
        z: Matrix::filled(1, 1, mean),
        rss,
        iterations: 0,
        rss_trace: vec![rss],
        converged: true,
        collapse_iterations: Vec::new(),
        restart: 0,
    }
}

/// Row memberships of new observations against a fitted model's `Z` and
/// `gamma` (the membership step alone), using the default penalty.
pub fn project_rows(model: &BiaaModel, x_new: &DataMatrix) -> Result<StochasticMatrix> {
    project_rows_with(model, x_new, FitConfig::DEFAULT_PENALTY)
}

pub fn project_rows_with(
    model: &BiaaModel,
    x_new: &DataMatrix,
    penalty_c: f64,
) -> Result<StochasticMatrix> {
    if x_new.m() != model.m() {
        return Err(Error::mismatch(
            "project_rows",
            (x_new.n(), model.m()),
            (x_new.n(), x_new.m()),
        ));
    }
    let profiles = model.z.matmul(model.gamma.values())?;
    let sol = solve_simplex_ls_rows(&profiles.transpose(), &x_new.values().transpose(), penalty_c)?;
    Ok(StochasticMatrix::from_normalized(sol.weights, Axis::Rows))
}

/// Largest entry of `|beta X theta - Z|`: zero (up to rounding) whenever
/// every row of `Z` is a convex combination of the rows of `X theta` and
/// every column a convex combination of the columns of `beta X`.
pub fn factor_structure_error(model: &BiaaModel, x: &DataMatrix) -> Result<f64> {
    let bxt = model
        .beta
        .values()
        .matmul(x.values())?
        .matmul(model.theta.values())?;
    check_shape("factor_structure_error", &bxt, model.z.shape())?;
    Ok(bxt.max_abs_diff(&model.z))
}

/// Tracks the best RSS and the stall counter of one run.
#[derive(Debug, Clone)]
pub(crate) struct Progress {
    best: f64,
    stalled: usize,
    rel_tol: f64,
    floor: f64,
}

impl Progress {
    pub(crate) fn new(rel_tol: f64, data_scale: f64) -> Self {
        Progress {
            best: f64::INFINITY,
            stalled: 0,
            rel_tol,
            floor: f64::EPSILON * f64::EPSILON * data_scale,
        }
    }

    /// Records one iteration's RSS; returns `true` when it beats the best
    /// so far.
    pub(crate) fn record(&mut self, rss: f64) -> bool {
        let improved = rss < self.best;
        let rel = if self.best.is_finite() && self.best > 0.0 {
            (self.best - rss) / self.best
        } else if improved {
            f64::INFINITY
        } else {
            0.0
        };
        if rel < self.rel_tol {
            self.stalled += 1;
        } else {
            self.stalled = 0;
        }
        if improved {
            self.best = rss;
        }
        improved
    }

    pub(crate) fn converged(&self) -> bool {
        self.stalled >= STALL_WINDOW || self.best <= self.floor
    }
}

/// Whether any two rows, or any two columns, of `z` coincide.
pub(crate) fn has_collapse(z: &Matrix, check_cols: bool) -> bool {
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= COLLAPSE_TOL);
    let rows: Vec<&[f64]> = z.row_iter().collect();
    let cols: Vec<Vec<f64>> = (0..z.cols()).map(|j| z.col(j)).collect();
    let any_pair = |v: &[&[f64]]| {
        (0..v.len()).any(|i| (i + 1..v.len()).any(|j| close(v[i], v[j])))
    };
    let col_refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    any_pair(&rows) || (check_cols && any_pair(&col_refs))
}
