//! Simplex-constrained least squares.
//!
//! Each convex least-squares subproblem `min |A x - b|^2` over the unit
//! simplex is solved by appending a row of constants `C` to both `A` and
//! `b` and handing the stacked system to a nonnegative least-squares
//! solver: the extra residual `C^2 (1 - sum x)^2` pulls the solution onto
//! the simplex. Columns are renormalized exactly afterwards.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Matrix};
use crate::types::normalize_slice;

/// KKT tolerance of [`nnls`], relative to `|A^T b|`.
pub const NNLS_KKT_TOL: f64 = 1e-10;

/// Nonnegative least squares, `min |A x - b|^2` subject to `x >= 0`.
///
/// Lawson and Hanson's active-set method. Sub-solves on the passive set use
/// the minimum-norm least-squares solution, and a column that is
/// numerically dependent on the passive set is never admitted, which keeps
/// rank-deficient and underdetermined systems from cycling.
pub fn nnls(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let (p, k) = a.shape();
    if p == 0 || k == 0 {
        return Err(Error::Empty);
    }
    if b.len() != p {
        return Err(Error::mismatch("nnls", (p, 1), (b.len(), 1)));
    }
    if let Some((row, col)) = a.find_non_finite() {
        return Err(Error::NonFinite { row, col });
    }
    if let Some(row) = b.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { row, col: 0 });
    }

    let atb = a.tr_mul_vec(b);
    let tol = NNLS_KKT_TOL * norm(&atb);
    let max_outer = 3 * k;

    let col_norms: Vec<f64> = (0..k).map(|j| norm(&a.col(j))).collect();
    let mut x = vec![0.0; k];
    let mut passive = vec![false; k];
    // columns barred from entering until x next changes
    let mut barred = vec![false; k];
    let mut outer = 0;

    loop {
        let w = gradient(a, b, &x);
        let candidate = (0..k)
            .filter(|&j| !passive[j] && !barred[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        let Some(t) = candidate else {
            break;
        };

        let mut set: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
        if !set.is_empty() && dependent_on(a, &set, t, col_norms[t]) {
            barred[t] = true;
            continue;
        }

        outer += 1;
        if outer > max_outer {
            return Err(Error::MaxIterationsExceeded {
                iterations: max_outer,
            });
        }

        set.push(t);
        set.sort_unstable();
        let mut s = passive_solve(a, b, &set);
        let t_pos = set.iter().position(|&j| j == t).unwrap();
        if s[t_pos] <= 0.0 {
            // the new column cannot move the fit in a descent direction
            barred[t] = true;
            continue;
        }
        passive[t] = true;

        // inner loop: step back toward feasibility until all passive > 0
        loop {
            if set.iter().zip(&s).all(|(_, &v)| v > 0.0) {
                for (&j, &v) in set.iter().zip(&s) {
                    x[j] = v;
                }
                break;
            }
            let mut step = 1.0f64;
            for (&j, &v) in set.iter().zip(&s) {
                if v <= 0.0 {
                    let denom = x[j] - v;
                    if denom > 0.0 {
                        step = step.min(x[j] / denom);
                    }
                }
            }
            for (&j, &v) in set.iter().zip(&s) {
                x[j] += step * (v - x[j]);
            }
            let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for &j in &set {
                if x[j] <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            set.retain(|&j| passive[j]);
            if set.is_empty() {
                break;
            }
            s = passive_solve(a, b, &set);
        }
        barred.iter_mut().for_each(|f| *f = false);
    }
    Ok(x)
}

/// `A^T (b - A x)`, the negative gradient of `|A x - b|^2 / 2`.
fn gradient(a: &Matrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    a.tr_mul_vec(&r)
}

fn passive_solve(a: &Matrix, b: &[f64], set: &[usize]) -> Vec<f64> {
    a.select_cols(set).least_squares(b)
}

/// Whether column `t` lies (numerically) in the span of the columns `set`.
fn dependent_on(a: &Matrix, set: &[usize], t: usize, t_norm: f64) -> bool {
    if t_norm == 0.0 {
        return true;
    }
    let sub = a.select_cols(set);
    let col = a.col(t);
    let coef = sub.least_squares(&col);
    let fitted = sub.mul_vec(&coef);
    let resid: f64 = col
        .iter()
        .zip(&fitted)
        .map(|(c, f)| (c - f) * (c - f))
        .sum();
    libm::sqrt(resid) <= 1e-10 * t_norm
}

/// A multi-target convex least-squares problem `design * W ~ targets`,
/// with every column of `W` constrained to the unit simplex.
#[derive(Debug, Clone)]
pub struct PenaltyProblem<'a> {
    /// p x k
    pub design: &'a Matrix,
    /// p x m
    pub targets: &'a Matrix,
    pub penalty_c: f64,
}

/// Solution of a [`PenaltyProblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    /// k x m, every column nonnegative and summing to exactly one.
    pub weights: Matrix,
    /// Largest `|1 - sum|` over the columns before renormalization.
    pub max_violation: f64,
    /// Columns where the penalized solve returned all zeros and the uniform
    /// vector was substituted.
    pub degenerate_columns: usize,
}

impl<'a> PenaltyProblem<'a> {
    pub fn new(design: &'a Matrix, targets: &'a Matrix, penalty_c: f64) -> Result<Self> {
        if design.rows() != targets.rows() {
            return Err(Error::mismatch(
                "PenaltyProblem",
                (design.rows(), targets.cols()),
                (targets.rows(), targets.cols()),
            ));
        }
        if design.rows() == 0 || design.cols() == 0 {
            return Err(Error::Empty);
        }
        if let Some((row, col)) = design.find_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        if !(penalty_c.is_finite() && penalty_c > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "penalty {penalty_c} must be positive"
            )));
        }
        Ok(PenaltyProblem {
            design,
            targets,
            penalty_c,
        })
    }

    /// Stacked design `[A; C 1^T]`.
    pub fn stacked_design(&self) -> Matrix {
        let mut a = self.design.clone();
        a.push_row(&vec![self.penalty_c; a.cols()]);
        a
    }

    /// Target column `j` with `C` appended.
    pub fn stacked_target(&self, j: usize) -> Vec<f64> {
        let mut b = self.targets.col(j);
        b.push(self.penalty_c);
        b
    }

    /// Unstacked residual `|A W - B|^2` of a candidate solution.
    pub fn rss(&self, weights: &Matrix) -> Result<f64> {
        self.design.matmul(weights)?.dist_sq(self.targets)
    }
}

/// Solves every target column independently on the simplex.
pub fn solve_simplex_ls(problem: &PenaltyProblem<'_>) -> Result<SimplexSolution> {
    let stacked = problem.stacked_design();
    let k = stacked.cols();
    let m = problem.targets.cols();
    let mut weights = Matrix::zeros(k, m);
    let mut max_violation = 0.0f64;
    let mut degenerate_columns = 0;
    for j in 0..m {
        let b = problem.stacked_target(j);
        let mut x = nnls(&stacked, &b)?;
        let sum: f64 = x.iter().sum();
        max_violation = max_violation.max((1.0 - sum).abs());
        if sum == 0.0 {
            degenerate_columns += 1;
        }
        normalize_slice(&mut x);
        for (h, v) in x.into_iter().enumerate() {
            weights[(h, j)] = v;
        }
    }
    Ok(SimplexSolution {
        weights,
        max_violation,
        degenerate_columns,
    })
}

/// Row-wise variant: finds a row-stochastic `W` (n x k) with
/// `W * design^T ~ targets^T`, i.e. solves the column problem for
/// `design` (p x k) against `targets` (p x n) and transposes.
pub fn solve_simplex_ls_rows(
    design: &Matrix,
    targets: &Matrix,
    penalty_c: f64,
) -> Result<SimplexSolution> {
    let problem = PenaltyProblem::new(design, targets, penalty_c)?;
    let mut sol = solve_simplex_ls(&problem)?;
    sol.weights = sol.weights.transpose();
    Ok(sol)
}

/// `|A x - b|^2` for one vector.
pub fn residual_sq(a: &Matrix, x: &[f64], b: &[f64]) -> f64 {
    a.row_iter()
        .zip(b)
        .map(|(r, bi)| {
            let d = dot(r, x) - bi;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_clamps_identity_fit() {
        let a = Matrix::identity(2);
        let x = nnls(&a, &[3.0, -2.0]).unwrap();
        assert_eq!(x, vec![3.0, 0.0]);
    }

    #[test]
    fn nnls_interior_optimum() {
        let a = Matrix::from_rows(&[[1.0], [1.0]]).unwrap();
        let x = nnls(&a, &[1.0, 3.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn nnls_all_negative_gives_zero() {
        let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(nnls(&a, &[-1.0, -1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn nnls_underdetermined_and_duplicate_columns() {
        // 2 equations, 4 unknowns with a repeated column
        let a = Matrix::from_rows(&[[1.0, 1.0, 2.0, 0.0], [0.0, 0.0, 1.0, 1.0]]).unwrap();
        let b = [3.0, 1.0];
        let x = nnls(&a, &b).unwrap();
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!(residual_sq(&a, &x, &b) < 1e-20);
    }

    #[test]
    fn nnls_rejects_bad_shapes() {
        let a = Matrix::identity(2);
        assert!(nnls(&a, &[1.0]).is_err());
        assert!(nnls(&Matrix::zeros(0, 0), &[]).is_err());
        assert!(nnls(&a, &[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn simplex_target_inside() {
        let a = Matrix::identity(2);
        let t = Matrix::from_rows(&[[0.3], [0.7]]).unwrap();
        let sol = solve_simplex_ls(&PenaltyProblem::new(&a, &t, 200.0).unwrap()).unwrap();
        assert!((sol.weights[(0, 0)] - 0.3).abs() < 1e-4);
        assert!((sol.weights[(1, 0)] - 0.7).abs() < 1e-4);
    }

    #[test]
    fn simplex_single_archetype_is_one() {
        let a = Matrix::from_rows(&[[2.0], [-1.0], [5.0]]).unwrap();
        let t = Matrix::from_rows(&[[1.0, -4.0], [0.0, 9.0], [3.0, 2.0]]).unwrap();
        let sol = solve_simplex_ls(&PenaltyProblem::new(&a, &t, 200.0).unwrap()).unwrap();
        assert_eq!(sol.weights.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn simplex_degenerate_falls_back_to_uniform() {
        // both design columns point away from the (negative) target, and the
        // penalty row is too weak to pull the solution off zero
        let a = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let t = Matrix::from_rows(&[[-1e9]]).unwrap();
        let sol = solve_simplex_ls(&PenaltyProblem::new(&a, &t, 1.0).unwrap()).unwrap();
        assert_eq!(sol.degenerate_columns, 1);
        assert_eq!(sol.weights.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn penalty_problem_validation() {
        let a = Matrix::identity(2);
        let t = Matrix::zeros(3, 1);
        assert!(PenaltyProblem::new(&a, &t, 200.0).is_err());
        let t = Matrix::zeros(2, 1);
        assert!(PenaltyProblem::new(&a, &t, 0.0).is_err());
        assert!(PenaltyProblem::new(&a, &t, f64::NAN).is_err());
    }
}
