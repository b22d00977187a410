use alloc::vec::Vec;

use super::{add, check_shape, has_collapse, rss_unchecked, sub, Progress};
use crate::error::{Error, Result};
use crate::rng::{random_stochastic, restart_stream, StreamRng};
use crate::simplex_ls::{solve_simplex_ls, solve_simplex_ls_rows, PenaltyProblem};
use crate::types::{Axis, BiaaModel, DataMatrix, FitConfig, StochasticMatrix};

/// How the column factors are treated during a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnSide {
    /// `gamma` and `theta` are fitted.
    Free,
    /// `gamma = theta = I`; requires `c = m`. This is plain archetype
    /// analysis expressed through the biarchetype loop.
    Identity,
}

/// Starting point of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct Factors {
    pub alpha: StochasticMatrix,
    pub beta: StochasticMatrix,
    pub theta: StochasticMatrix,
    pub gamma: StochasticMatrix,
}

impl Factors {
    /// Normalized i.i.d. uniform draws, in the order alpha, beta, gamma,
    /// theta. With [`ColumnSide::Identity`] the column factors are not
    /// drawn.
    pub fn random(rng: &mut StreamRng, n: usize, m: usize, k: usize, c: usize, side: ColumnSide) -> Self {
        let alpha = random_stochastic(rng, n, k, Axis::Rows);
        let beta = random_stochastic(rng, k, n, Axis::Rows);
        let (gamma, theta) = match side {
            ColumnSide::Free => {
                let gamma = random_stochastic(rng, c, m, Axis::Columns);
                let theta = random_stochastic(rng, m, c, Axis::Columns);
                (gamma, theta)
            }
            ColumnSide::Identity => (
                StochasticMatrix::identity(m, Axis::Columns),
                StochasticMatrix::identity(m, Axis::Columns),
            ),
        };
        Factors {
            alpha,
            beta,
            theta,
            gamma,
        }
    }

    fn check(&self, n: usize, m: usize, k: usize, c: usize) -> Result<()> {
        check_shape("alpha", self.alpha.values(), (n, k))?;
        check_shape("beta", self.beta.values(), (k, n))?;
        check_shape("theta", self.theta.values(), (m, c))?;
        check_shape("gamma", self.gamma.values(), (c, m))?;
        let axes = [
            (self.alpha.axis(), Axis::Rows),
            (self.beta.axis(), Axis::Rows),
            (self.theta.axis(), Axis::Columns),
            (self.gamma.axis(), Axis::Columns),
        ];
        if axes.iter().any(|(a, b)| a != b) {
            return Err(Error::InvalidConfig(
                "initial factors have the wrong stochastic axis".into(),
            ));
        }
        Ok(())
    }
}

/// RSS immediately before and after the two membership steps of one
/// iteration (with `Z` held fixed between them).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipStep {
    pub before: f64,
    pub after: f64,
}

/// Outcome of a single run.
#[derive(Debug, Clone)]
pub struct BiaaRun {
    pub model: BiaaModel,
    pub membership_steps: Vec<MembershipStep>,
}

/// Fits a biarchetype model, keeping the best of `config.n_restarts`
/// randomly initialized runs.
pub fn fit_biaa(x: &DataMatrix, config: &FitConfig) -> Result<BiaaModel> {
    config.validate(x.n(), x.m())?;
    let mut models = Vec::with_capacity(config.n_restarts);
    for r in 0..config.n_restarts {
        models.push(fit_biaa_restart(x, config, r)?);
    }
    Ok(select_best(models).expect("at least one restart"))
}

/// One randomly initialized run, drawing from the stream of restart
/// `restart`. Runs are independent, so callers may execute them in any
/// order and combine them with [`select_best`].
pub fn fit_biaa_restart(x: &DataMatrix, config: &FitConfig, restart: usize) -> Result<BiaaModel> {
    config.validate(x.n(), x.m())?;
    let mut rng = restart_stream(config.seed, restart);
    let init = Factors::random(&mut rng, x.n(), x.m(), config.k, config.c, ColumnSide::Free);
    let mut run = fit_biaa_from(x, config, init, ColumnSide::Free)?;
    run.model.restart = restart;
    Ok(run.model)
}

/// Lowest RSS wins; ties go to the lower restart index, whatever order the
/// models arrive in.
pub fn select_best(models: Vec<BiaaModel>) -> Option<BiaaModel> {
    models.into_iter().min_by(|a, b| {
        a.rss
            .total_cmp(&b.rss)
            .then(a.restart.cmp(&b.restart))
    })
}

/// Runs the alternating algorithm from the given factors.
///
/// Every iteration:
/// 1. memberships `alpha` given `Z gamma`, then `gamma` given `alpha Z`;
/// 2. unconstrained biarchetypes `Z = pinv(alpha) X pinv(gamma)`;
/// 3. mixture weights `beta` against that `Z` given `X theta`, then
///    `theta` given `beta X`;
/// 4. constrained biarchetypes `Z = beta X theta` and the new RSS.
///
/// The returned model is the iterate with the lowest RSS, taken after step
/// 4 so that `Z = beta X theta` always holds for it.
pub fn fit_biaa_from(
    x: &DataMatrix,
    config: &FitConfig,
    init: Factors,
    side: ColumnSide,
) -> Result<BiaaRun> {
    let (n, m) = (x.n(), x.m());
    config.validate(n, m)?;
    if side == ColumnSide::Identity && config.c != m {
        return Err(Error::InvalidConfig(alloc::format!(
            "identity column factors need c = m = {m}, got c = {}",
            config.c
        )));
    }
    init.check(n, m, config.k, config.c)?;

    let xv = x.values();
    let x_t = xv.transpose();
    let penalty = config.penalty_c;

    let Factors {
        mut alpha,
        mut beta,
        mut theta,
        mut gamma,
    } = init;
    let mut z = beta.values().matmul(xv)?.matmul(theta.values())?;

    let mut progress = Progress::new(config.rel_tol, xv.frobenius_sq());
    let mut best: Option<BiaaModel> = None;
    let mut trace = Vec::new();
    let mut steps = Vec::new();
    let mut collapses = Vec::new();
    let mut converged = false;

    for iter in 1..=config.max_iter {
        let before = rss_unchecked(xv, alpha.values(), &z, gamma.values())?;

        // memberships
        let profiles = z.matmul(gamma.values())?;
        let sol = solve_simplex_ls_rows(&profiles.transpose(), &x_t, penalty)?;
        alpha = StochasticMatrix::from_normalized(sol.weights, Axis::Rows);
        if side == ColumnSide::Free {
            let design = alpha.values().matmul(&z)?;
            let sol = solve_simplex_ls(&PenaltyProblem::new(&design, xv, penalty)?)?;
            gamma = StochasticMatrix::from_normalized(sol.weights, Axis::Columns);
        }
        let after = rss_unchecked(xv, alpha.values(), &z, gamma.values())?;
        steps.push(MembershipStep { before, after });

        // unconstrained biarchetypes: the least-squares Z nearest the
        // current one, which is pinv(alpha) X pinv(gamma) at full rank
        let resid = sub(xv, &alpha.values().matmul(&z)?.matmul(gamma.values())?);
        let z_free = add(
            &z,
            &alpha
                .values()
                .pinv()
                .matmul(&resid)?
                .matmul(&gamma.values().pinv())?,
        );

        // mixture weights
        let row_mix = xv.matmul(theta.values())?;
        let sol = solve_simplex_ls_rows(&row_mix.transpose(), &z_free.transpose(), penalty)?;
        beta = StochasticMatrix::from_normalized(sol.weights, Axis::Rows);
        let col_mix = beta.values().matmul(xv)?;
        if side == ColumnSide::Free {
            let sol = solve_simplex_ls(&PenaltyProblem::new(&col_mix, &z_free, penalty)?)?;
            theta = StochasticMatrix::from_normalized(sol.weights, Axis::Columns);
        }

        z = col_mix.matmul(theta.values())?;
        let rss = rss_unchecked(xv, alpha.values(), &z, gamma.values())?;
        trace.push(rss);
        if has_collapse(&z, true) {
            collapses.push(iter);
        }

        if progress.record(rss) {
            best = Some(BiaaModel {
                alpha: alpha.clone(),
                beta: beta.clone(),
                theta: theta.clone(),
                gamma: gamma.clone(),
                z: z.clone(),
                rss,
                iterations: iter,
                rss_trace: Vec::new(),
                converged: false,
                collapse_iterations: Vec::new(),
                restart: 0,
            });
        }
        if progress.converged() {
            converged = true;
            break;
        }
    }

    let model = match best {
        Some(mut model) => {
            model.iterations = trace.len();
            model.rss_trace = trace;
            model.converged = converged;
            model.collapse_iterations = collapses;
            model
        }
        // max_iter == 0: report the starting point
        None => {
            let rss = rss_unchecked(xv, alpha.values(), &z, gamma.values())?;
            BiaaModel {
                alpha,
                beta,
                theta,
                gamma,
                z,
                rss,
                iterations: 0,
                rss_trace: Vec::new(),
                converged: false,
                collapse_iterations: Vec::new(),
                restart: 0,
            }
        }
    };
    Ok(BiaaRun {
        model,
        membership_steps: steps,
    })
}
