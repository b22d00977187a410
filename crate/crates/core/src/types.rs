//! Shared data model: the data matrix, stochastic factor matrices, fit
//! configuration, fitted models and the RSS surface.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Entries above `-NEGATIVE_CLAMP` but below zero are solver noise and are
/// clamped silently.
pub const NEGATIVE_CLAMP: f64 = 1e-9;

/// Largest axis-sum deviation (or negative entry magnitude) accepted by
/// [`validate_stochastic`] before renormalization.
pub const STOCHASTIC_HARD_TOL: f64 = 1e-3;

/// Observations by features, every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Matrix,
    column_means: Option<Vec<f64>>,
    column_stds: Option<Vec<f64>>,
}

impl DataMatrix {
    pub fn new(values: Matrix) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::Empty);
        }
        if let Some((row, col)) = values.find_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        Ok(DataMatrix {
            values,
            column_means: None,
            column_stds: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    #[inline]
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.values.cols()
    }

    pub fn column_means(&self) -> Option<&[f64]> {
        self.column_means.as_deref()
    }

    pub fn column_stds(&self) -> Option<&[f64]> {
        self.column_stds.as_deref()
    }

    pub fn is_standardized(&self) -> bool {
        self.column_stds.is_some()
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    /// Z-scores every column using the population standard deviation
    /// (divide by n). The means and deviations are recorded so that
    /// [`DataMatrix::destandardize`] can undo the transform.
    pub fn standardize(&self) -> Result<DataMatrix> {
        let (n, m) = self.values.shape();
        let mut means = Vec::with_capacity(m);
        let mut stds = Vec::with_capacity(m);
        for j in 0..m {
            let col = self.values.col(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
            let std = libm::sqrt(var);
            // relative test so that large constant columns are still caught
            if std.is_nan() || std <= 1e-12 * mean.abs().max(1e-300) {
                return Err(Error::ConstantColumn { column: j });
            }
            means.push(mean);
            stds.push(std);
        }
        let values = Matrix::from_fn(n, m, |i, j| (self.values[(i, j)] - means[j]) / stds[j]);
        Ok(DataMatrix {
            values,
            column_means: Some(means),
            column_stds: Some(stds),
        })
    }

    /// Maps a standardized matrix back to the original units. Matrices
    /// without standardization metadata are returned unchanged.
    pub fn destandardize(&self) -> DataMatrix {
        match (&self.column_means, &self.column_stds) {
            (Some(means), Some(stds)) => DataMatrix {
                values: Matrix::from_fn(self.n(), self.m(), |i, j| {
                    self.values[(i, j)] * stds[j] + means[j]
                }),
                column_means: None,
                column_stds: None,
            },
            _ => self.clone(),
        }
    }
}

/// Which vectors of a [`StochasticMatrix`] sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Columns,
}

/// Nonnegative matrix whose rows (or columns) each sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    values: Matrix,
    axis: Axis,
}

impl StochasticMatrix {
    #[inline]
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    #[inline]
    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    pub fn identity(n: usize, axis: Axis) -> Self {
        StochasticMatrix {
            values: Matrix::identity(n),
            axis,
        }
    }

    /// Uniform weights `1/len` along the stochastic axis.
    pub fn uniform(rows: usize, cols: usize, axis: Axis) -> Self {
        let len = match axis {
            Axis::Rows => cols,
            Axis::Columns => rows,
        };
        StochasticMatrix {
            values: Matrix::filled(rows, cols, 1.0 / len as f64),
            axis,
        }
    }

    /// Accepts `values` unchanged if every entry is nonnegative and every
    /// axis sum is within `tol` of one.
    pub fn from_exact(values: Matrix, axis: Axis, tol: f64) -> Result<Self> {
        if let Some((row, col)) = values.find_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        for v in 0..axis_vectors(&values, axis) {
            let s = axis_sum(&values, axis, v);
            if (s - 1.0).abs() > tol {
                return Err(Error::NotStochastic {
                    index: v,
                    reason: format!("sum {s} deviates from 1"),
                });
            }
        }
        if let Some(p) = values.as_slice().iter().position(|&x| x < 0.0) {
            let index = match axis {
                Axis::Rows => p / values.cols(),
                Axis::Columns => p % values.cols(),
            };
            return Err(Error::NotStochastic {
                index,
                reason: "negative entry".into(),
            });
        }
        Ok(StochasticMatrix { values, axis })
    }

    /// Wraps a matrix the caller has already normalized exactly.
    pub(crate) fn from_normalized(values: Matrix, axis: Axis) -> Self {
        StochasticMatrix { values, axis }
    }

    /// Largest deviation of any axis-sum from one, and the most negative
    /// entry (as a nonnegative magnitude).
    pub fn violation(&self) -> (f64, f64) {
        axis_violation(&self.values, self.axis)
    }

    /// Index of the largest weight in every stochastic vector; ties go to
    /// the lowest index.
    pub fn argmax(&self) -> Vec<usize> {
        let m = &self.values;
        let vectors: Vec<Vec<f64>> = match self.axis {
            Axis::Rows => m.row_iter().map(<[f64]>::to_vec).collect(),
            Axis::Columns => (0..m.cols()).map(|j| m.col(j)).collect(),
        };
        vectors
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
                        if x > best.1 {
                            (i, x)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect()
    }
}

fn axis_vectors(m: &Matrix, axis: Axis) -> usize {
    match axis {
        Axis::Rows => m.rows(),
        Axis::Columns => m.cols(),
    }
}

fn axis_sum(m: &Matrix, axis: Axis, v: usize) -> f64 {
    match axis {
        Axis::Rows => m.row(v).iter().sum(),
        Axis::Columns => (0..m.rows()).map(|i| m[(i, v)]).sum(),
    }
}

fn axis_violation(m: &Matrix, axis: Axis) -> (f64, f64) {
    let sum_dev = (0..axis_vectors(m, axis))
        .map(|v| (axis_sum(m, axis, v) - 1.0).abs())
        .fold(0.0, f64::max);
    let neg = m.as_slice().iter().fold(0.0, |acc: f64, &x| if -x > acc { -x } else { acc });
    (sum_dev, neg)
}

/// Checks that `values` is stochastic along `axis` and returns a cleaned
/// copy.
///
/// Small violations are treated as solver drift: entries in
/// `(-1e-9, 0)` are clamped to zero and every vector is rescaled to sum to
/// exactly one. Axis sums off by more than `1e-3`, or entries below
/// `-1e-3`, are rejected.
pub fn validate_stochastic(values: &Matrix, axis: Axis) -> Result<StochasticMatrix> {
    if let Some((row, col)) = values.find_non_finite() {
        return Err(Error::NonFinite { row, col });
    }
    let mut out = values.clone();
    for (p, x) in out.as_mut_slice().iter_mut().enumerate() {
        if *x < 0.0 {
            if *x < -STOCHASTIC_HARD_TOL {
                let index = match axis {
                    Axis::Rows => p / values.cols(),
                    Axis::Columns => p % values.cols(),
                };
                return Err(Error::NotStochastic {
                    index,
                    reason: format!("negative entry {x}"),
                });
            }
            if *x > -NEGATIVE_CLAMP {
                *x = 0.0;
            }
        }
    }
    for v in 0..axis_vectors(&out, axis) {
        let s = axis_sum(&out, axis, v);
        if (s - 1.0).abs() > STOCHASTIC_HARD_TOL {
            return Err(Error::NotStochastic {
                index: v,
                reason: format!("sum {s} deviates from 1"),
            });
        }
    }
    normalize_axis(&mut out, axis);
    Ok(StochasticMatrix { values: out, axis })
}

/// Rescales every vector along `axis` to sum to one. Vectors summing to
/// zero are replaced by the uniform vector.
pub(crate) fn normalize_axis(m: &mut Matrix, axis: Axis) {
    let (rows, cols) = m.shape();
    match axis {
        Axis::Rows => {
            for i in 0..rows {
                normalize_slice(m.row_mut(i));
            }
        }
        Axis::Columns => {
            for j in 0..cols {
                let mut col = m.col(j);
                normalize_slice(&mut col);
                for (i, x) in col.into_iter().enumerate() {
                    m[(i, j)] = x;
                }
            }
        }
    }
}

pub(crate) fn normalize_slice(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

/// Budgets and constants for one biarchetype (or archetype) fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Number of row archetypes.
    pub k: usize,
    /// Number of column archetypes.
    pub c: usize,
    /// Weight of the appended sum-to-one row in the penalized least squares.
    pub penalty_c: f64,
    pub max_iter: usize,
    /// Relative improvement of the best RSS below which an iteration counts
    /// as stalled.
    pub rel_tol: f64,
    pub n_restarts: usize,
    pub seed: u64,
}

impl FitConfig {
    pub const DEFAULT_PENALTY: f64 = 200.0;
    pub const DEFAULT_MAX_ITER: usize = 500;
    pub const DEFAULT_REL_TOL: f64 = 1e-6;
    pub const DEFAULT_RESTARTS: usize = 5;

    pub fn new(k: usize, c: usize) -> Self {
        FitConfig {
            k,
            c,
            penalty_c: Self::DEFAULT_PENALTY,
            max_iter: Self::DEFAULT_MAX_ITER,
            rel_tol: Self::DEFAULT_REL_TOL,
            n_restarts: Self::DEFAULT_RESTARTS,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, n: usize) -> Self {
        self.n_restarts = n;
        self
    }

    pub fn with_max_iter(mut self, n: usize) -> Self {
        self.max_iter = n;
        self
    }

    pub fn with_penalty(mut self, c: f64) -> Self {
        self.penalty_c = c;
        self
    }

    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }

    /// Checks the configuration against an `n x m` data matrix.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            return Err(Error::InvalidConfig(format!("k = {} must lie in 1..={n}", self.k)));
        }
        if self.c == 0 || self.c > m {
            return Err(Error::InvalidConfig(format!("c = {} must lie in 1..={m}", self.c)));
        }
        if !(self.penalty_c.is_finite() && self.penalty_c > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "penalty {} must be positive",
                self.penalty_c
            )));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tolerance {} must be positive",
                self.rel_tol
            )));
        }
        if self.n_restarts == 0 {
            return Err(Error::InvalidConfig("at least one restart is required".into()));
        }
        Ok(())
    }
}

/// A fitted biarchetype model `X ~ alpha * Z * gamma` with
/// `Z = beta * X * theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiaaModel {
    /// n x k, rows sum to one.
    pub alpha: StochasticMatrix,
    /// k x n, rows sum to one.
    pub beta: StochasticMatrix,
    /// m x c, columns sum to one.
    pub theta: StochasticMatrix,
    /// c x m, columns sum to one.
    pub gamma: StochasticMatrix,
    /// k x c biarchetypes.
    pub z: Matrix,
    pub rss: f64,
    pub iterations: usize,
    /// RSS after every full iteration of the winning run.
    pub rss_trace: Vec<f64>,
    pub converged: bool,
    /// Iterations (1-based) at which two rows or two columns of `Z`
    /// coincided within `1e-8`.
    pub collapse_iterations: Vec<usize>,
    /// Which restart produced this model.
    pub restart: usize,
}

impl BiaaModel {
    pub fn k(&self) -> usize {
        self.z.rows()
    }

    pub fn c(&self) -> usize {
        self.z.cols()
    }

    pub fn n(&self) -> usize {
        self.alpha.values().rows()
    }

    pub fn m(&self) -> usize {
        self.gamma.values().cols()
    }

    /// Running minimum of the RSS trace.
    pub fn best_so_far_trace(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.rss_trace
            .iter()
            .map(|&r| {
                best = best.min(r);
                best
            })
            .collect()
    }

    pub fn collapsed(&self) -> bool {
        !self.collapse_iterations.is_empty()
    }
}

/// Best RSS over a grid of `(k, c)` pairs and the suggested elbow.
#[derive(Debug, Clone, PartialEq)]
pub struct RssSurface {
    pub k_range: (usize, usize),
    pub c_range: (usize, usize),
    /// Row-major over `k` then `c`; `None` marks a cell whose fit failed.
    pub rss_grid: Vec<Option<f64>>,
    pub suggested: Option<(usize, usize)>,
    pub flatten_threshold: f64,
}

impl RssSurface {
    pub fn k_values(&self) -> core::ops::RangeInclusive<usize> {
        self.k_range.0..=self.k_range.1
    }

    pub fn c_values(&self) -> core::ops::RangeInclusive<usize> {
        self.c_range.0..=self.c_range.1
    }

    pub fn width(&self) -> usize {
        self.c_range.1 + 1 - self.c_range.0
    }

    /// RSS of cell `(k, c)`, `None` when out of range or failed.
    pub fn get(&self, k: usize, c: usize) -> Option<f64> {
        if !self.k_values().contains(&k) || !self.c_values().contains(&c) {
            return None;
        }
        self.rss_grid[(k - self.k_range.0) * self.width() + (c - self.c_range.0)]
    }

    /// Iterates `(k, c, rss)` over every cell that was fitted successfully.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.k_values()
            .flat_map(move |k| self.c_values().map(move |c| (k, c)))
            .filter_map(move |(k, c)| self.get(k, c).map(|r| (k, c, r)))
    }
}
