//! Multi-threaded drivers. Restarts and surface cells are independent and
//! seeded by index, so the results equal the sequential ones whatever the
//! thread count.

use biarch_core::selection::{assemble_surface, fit_cell};
use biarch_core::solvers::{fit_aa_restart, fit_biaa_restart, select_best};
use biarch_core::{BiaaModel, DataMatrix, FitConfig, Result, RssSurface};
use rayon::prelude::*;

/// Environment variable consulted when no thread count is given.
pub const THREADS_ENV: &str = "BIARCH_THREADS";

/// Thread pool of `threads` workers, falling back to `BIARCH_THREADS` and
/// then to rayon's default.
pub fn pool(threads: Option<usize>) -> std::result::Result<rayon::ThreadPool, String> {
    let threads = match threads {
        Some(t) => t,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| format!("{THREADS_ENV}={v:?} is not a thread count"))?,
            Err(_) => 0,
        },
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())
}

pub fn fit_biaa_par(x: &DataMatrix, config: &FitConfig) -> Result<BiaaModel> {
    config.validate(x.n(), x.m())?;
    let models = (0..config.n_restarts)
        .into_par_iter()
        .map(|r| fit_biaa_restart(x, config, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(select_best(models).expect("at least one restart"))
}

pub fn fit_aa_par(x: &DataMatrix, k: usize, config: &FitConfig) -> Result<BiaaModel> {
    let mut cfg = config.clone();
    cfg.k = k;
    cfg.c = x.m();
    cfg.validate(x.n(), x.m())?;
    let models = (0..cfg.n_restarts)
        .into_par_iter()
        .map(|r| fit_aa_restart(x, k, &cfg, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(select_best(models).expect("at least one restart"))
}

pub fn rss_surface_par(
    x: &DataMatrix,
    k_range: (usize, usize),
    c_range: (usize, usize),
    template: &FitConfig,
    threshold: f64,
) -> Result<RssSurface> {
    for (name, (lo, hi), max) in [("k", k_range, x.n()), ("c", c_range, x.m())] {
        if lo == 0 || lo > hi || hi > max {
            return Err(biarch_core::Error::InvalidConfig(format!(
                "{name} range {lo}..={hi} must lie within 1..={max}"
            )));
        }
    }
    let cells: Vec<(usize, usize)> = (k_range.0..=k_range.1)
        .flat_map(|k| (c_range.0..=c_range.1).map(move |c| (k, c)))
        .collect();
    let grid = cells
        .par_iter()
        .map(|&(k, c)| fit_cell(x, template, k, c).ok().map(|m| m.rss))
        .collect();
    Ok(assemble_surface(k_range, c_range, grid, threshold))
}
