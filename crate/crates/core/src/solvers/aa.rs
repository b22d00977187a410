use alloc::vec::Vec;

use super::{add, biaa::MembershipStep, has_collapse, select_best, sub, BiaaRun, Progress};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{random_stochastic, restart_stream};
use crate::simplex_ls::solve_simplex_ls_rows;
use crate::types::{Axis, BiaaModel, DataMatrix, FitConfig, StochasticMatrix};

/// Archetype analysis: `X ~ alpha Z` with `Z = beta X`.
///
/// Only `k` is taken from the argument; `config.c` is ignored and the
/// returned model carries `gamma = theta = I` (so `c = m`).
pub fn fit_aa(x: &DataMatrix, k: usize, config: &FitConfig) -> Result<BiaaModel> {
    let config = aa_config(x, k, config)?;
    let mut models = Vec::with_capacity(config.n_restarts);
    for r in 0..config.n_restarts {
        models.push(fit_aa_restart(x, k, &config, r)?);
    }
    Ok(select_best(models).expect("at least one restart"))
}

pub fn fit_aa_restart(x: &DataMatrix, k: usize, config: &FitConfig, restart: usize) -> Result<BiaaModel> {
    let config = aa_config(x, k, config)?;
    let mut rng = restart_stream(config.seed, restart);
    let alpha = random_stochastic(&mut rng, x.n(), k, Axis::Rows);
    let beta = random_stochastic(&mut rng, k, x.n(), Axis::Rows);
    let mut run = fit_aa_from(x, &config, alpha, beta)?;
    run.model.restart = restart;
    Ok(run.model)
}

fn aa_config(x: &DataMatrix, k: usize, config: &FitConfig) -> Result<FitConfig> {
    let mut config = config.clone();
    config.k = k;
    config.c = x.m();
    config.validate(x.n(), x.m())?;
    Ok(config)
}

/// Alternates `alpha` given `Z`, `Z = pinv(alpha) X`, `beta` against that
/// `Z`, and `Z = beta X`, keeping the lowest-RSS iterate.
pub fn fit_aa_from(
    x: &DataMatrix,
    config: &FitConfig,
    mut alpha: StochasticMatrix,
    mut beta: StochasticMatrix,
) -> Result<BiaaRun> {
    let (n, m) = (x.n(), x.m());
    let k = alpha.values().cols();
    if alpha.values().shape() != (n, k) || beta.values().shape() != (k, n) {
        return Err(Error::mismatch("fit_aa_from", (n, k), alpha.values().shape()));
    }
    let xv = x.values();
    let x_t = xv.transpose();
    let penalty = config.penalty_c;

    let mut z = beta.values().matmul(xv)?;
    let mut progress = Progress::new(config.rel_tol, xv.frobenius_sq());
    let mut best: Option<(StochasticMatrix, StochasticMatrix, Matrix, f64)> = None;
    let mut trace = Vec::new();
    let mut steps = Vec::new();
    let mut collapses = Vec::new();
    let mut converged = false;

    let rss_of = |alpha: &StochasticMatrix, z: &Matrix| -> Result<f64> {
        alpha.values().matmul(z)?.dist_sq(xv)
    };

    for iter in 1..=config.max_iter {
        let before = rss_of(&alpha, &z)?;
        let sol = solve_simplex_ls_rows(&z.transpose(), &x_t, penalty)?;
        alpha = StochasticMatrix::from_normalized(sol.weights, Axis::Rows);
        steps.push(MembershipStep {
            before,
            after: rss_of(&alpha, &z)?,
        });

        let resid = sub(xv, &alpha.values().matmul(&z)?);
        let z_free = add(&z, &alpha.values().pinv().matmul(&resid)?);
        let sol = solve_simplex_ls_rows(&x_t, &z_free.transpose(), penalty)?;
        beta = StochasticMatrix::from_normalized(sol.weights, Axis::Rows);
        z = beta.values().matmul(xv)?;

        let rss = rss_of(&alpha, &z)?;
        trace.push(rss);
        if has_collapse(&z, false) {
            collapses.push(iter);
        }
        if progress.record(rss) {
            best = Some((alpha.clone(), beta.clone(), z.clone(), rss));
        }
        if progress.converged() {
            converged = true;
            break;
        }
    }

    let (alpha, beta, z, rss) = match best {
        Some(b) => b,
        None => {
            let rss = rss_of(&alpha, &z)?;
            (alpha, beta, z, rss)
        }
    };
    let model = BiaaModel {
        alpha,
        beta,
        theta: StochasticMatrix::identity(m, Axis::Columns),
        gamma: StochasticMatrix::identity(m, Axis::Columns),
        z,
        rss,
        iterations: trace.len(),
        rss_trace: trace,
        converged,
        collapse_iterations: collapses,
        restart: 0,
    };
    Ok(BiaaRun {
        model,
        membership_steps: steps,
    })
}
