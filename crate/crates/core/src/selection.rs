//! Choosing `(k, c)`: fit a grid of models and look for the point where the
//! RSS surface flattens.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::cell_seed;
use crate::solvers::fit_biaa;
use crate::types::{BiaaModel, DataMatrix, FitConfig, RssSurface};

pub const DEFAULT_ELBOW_THRESHOLD: f64 = 0.05;

/// Cells whose RSS is at most this fraction of the largest cell count as
/// already flat: a forward drop from them is reported as zero.
pub const FLAT_FLOOR: f64 = 1e-9;

/// Checks that `lo..=hi` is a nonempty range inside `1..=max`.
fn check_range(name: &str, (lo, hi): (usize, usize), max: usize) -> Result<()> {
    if lo == 0 || lo > hi || hi > max {
        return Err(Error::InvalidConfig(alloc::format!(
            "{name} range {lo}..={hi} must lie within 1..={max}"
        )));
    }
    Ok(())
}

/// Fits the `(k, c)` cell of a sweep. The cell seed depends only on the
/// template seed and the coordinates.
pub fn fit_cell(x: &DataMatrix, template: &FitConfig, k: usize, c: usize) -> Result<BiaaModel> {
    let mut config = template.clone();
    config.k = k;
    config.c = c;
    config.seed = cell_seed(template.seed, k, c);
    fit_biaa(x, &config)
}

/// Best-of-restarts RSS for every `(k, c)` in the two inclusive ranges,
/// with the elbow suggested at `threshold`. Cells whose fit fails are left
/// empty.
pub fn rss_surface(
    x: &DataMatrix,
    k_range: (usize, usize),
    c_range: (usize, usize),
    template: &FitConfig,
    threshold: f64,
) -> Result<RssSurface> {
    check_range("k", k_range, x.n())?;
    check_range("c", c_range, x.m())?;
    let mut grid = Vec::new();
    for k in k_range.0..=k_range.1 {
        for c in c_range.0..=c_range.1 {
            grid.push(fit_cell(x, template, k, c).ok().map(|m| m.rss));
        }
    }
    Ok(assemble_surface(k_range, c_range, grid, threshold))
}

/// Wraps precomputed cells (row-major over `k` then `c`) into a surface and
/// fills in the suggestion.
pub fn assemble_surface(
    k_range: (usize, usize),
    c_range: (usize, usize),
    rss_grid: Vec<Option<f64>>,
    threshold: f64,
) -> RssSurface {
    let mut surface = RssSurface {
        k_range,
        c_range,
        rss_grid,
        suggested: None,
        flatten_threshold: threshold,
    };
    surface.suggested = suggest_elbow(&surface, threshold).ok();
    surface
}

/// Largest relative RSS drop from `(k, c)` to `(k+1, c)`, `(k, c+1)` and
/// `(k+1, c+1)`, or `None` if a neighbor is missing.
pub fn forward_drop(surface: &RssSurface, k: usize, c: usize) -> Option<f64> {
    let here = surface.get(k, c)?;
    let scale = surface.cells().map(|(_, _, r)| r).fold(0.0, f64::max);
    let neighbors = [
        surface.get(k + 1, c)?,
        surface.get(k, c + 1)?,
        surface.get(k + 1, c + 1)?,
    ];
    if here <= FLAT_FLOOR * scale || here == 0.0 {
        return Some(0.0);
    }
    Some(
        neighbors
            .iter()
            .map(|&nb| (here - nb) / here)
            .fold(f64::NEG_INFINITY, f64::max),
    )
}

/// The first cell, by smallest `k + c` and then smallest `k`, whose largest
/// forward relative drop is below `threshold`.
pub fn suggest_elbow(surface: &RssSurface, threshold: f64) -> Result<(usize, usize)> {
    let mut candidates: Vec<(usize, usize)> = surface
        .k_values()
        .flat_map(|k| surface.c_values().map(move |c| (k, c)))
        .collect();
    candidates.sort_by_key(|&(k, c)| (k + c, k));
    candidates
        .into_iter()
        .find(|&(k, c)| forward_drop(surface, k, c).is_some_and(|d| d < threshold))
        .ok_or(Error::NoElbow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surface_from(k: (usize, usize), c: (usize, usize), f: impl Fn(usize, usize) -> f64) -> RssSurface {
        let mut grid = Vec::new();
        for kk in k.0..=k.1 {
            for cc in c.0..=c.1 {
                grid.push(Some(f(kk, cc)));
            }
        }
        assemble_surface(k, c, grid, DEFAULT_ELBOW_THRESHOLD)
    }

    #[test]
    fn geometric_surface_has_no_elbow() {
        let s = surface_from((1, 4), (1, 4), |k, c| libm::pow(0.5, (k + c) as f64));
        assert_eq!(suggest_elbow(&s, 0.05), Err(Error::NoElbow));
        assert_eq!(s.suggested, None);
    }

    #[test]
    fn flat_surface_suggests_origin() {
        let s = surface_from((1, 3), (1, 3), |_, _| 0.0);
        assert_eq!(suggest_elbow(&s, 0.05), Ok((1, 1)));
        let s = surface_from((1, 3), (1, 3), |_, _| 4.2);
        assert_eq!(suggest_elbow(&s, 0.05), Ok((1, 1)));
    }

    #[test]
    fn toy_shaped_surface() {
        // exact optimal RSS of the 5x5 toy matrix
        let s = surface_from((1, 3), (1, 3), |k, c| match (k, c) {
            (1, 1) => 1300.0,
            (1, _) => 1250.0,
            (_, 1) => 50.0,
            _ => 0.0,
        });
        assert_eq!(suggest_elbow(&s, 0.05), Ok((2, 2)));
    }

    #[test]
    fn failed_cells_are_skipped() {
        let mut s = surface_from((1, 3), (1, 3), |k, c| match (k, c) {
            (1, 1) => 100.0,
            _ => 1.0,
        });
        // (1, 2) fails: (1, 1) and (1, 2) can no longer be judged
        s.rss_grid[1] = None;
        assert_eq!(forward_drop(&s, 1, 1), None);
        assert_eq!(suggest_elbow(&s, 0.05), Ok((2, 1)));
    }

    #[test]
    fn ranges_are_checked() {
        let x = crate::data_gen::toy_matrix();
        let t = FitConfig::new(1, 1);
        assert!(rss_surface(&x, (0, 2), (1, 2), &t, 0.05).is_err());
        assert!(rss_surface(&x, (1, 6), (1, 2), &t, 0.05).is_err());
        assert!(rss_surface(&x, (2, 1), (1, 2), &t, 0.05).is_err());
    }

    #[test]
    fn constant_matrix_surface_is_zero() {
        let x = DataMatrix::new(crate::Matrix::filled(6, 4, 7.0)).unwrap();
        let t = FitConfig::new(1, 1).with_restarts(2).with_max_iter(50);
        let s = rss_surface(&x, (1, 2), (1, 2), &t, 0.05).unwrap();
        for (_, _, r) in s.cells() {
            assert!(r < 1e-18, "{r}");
        }
        assert_eq!(s.suggested, Some((1, 1)));
        assert_eq!(s.rss_grid.len(), 4);
    }

    proptest! {
        #[test]
        fn elbow_is_scale_invariant(
            cells in proptest::collection::vec(0.0f64..100.0, 16),
            lambda in 1e-3f64..1e3,
        ) {
            let grid: Vec<Option<f64>> = cells.iter().map(|&v| Some(v)).collect();
            let scaled: Vec<Option<f64>> = cells.iter().map(|&v| Some(v * lambda)).collect();
            let a = assemble_surface((1, 4), (1, 4), grid, 0.05);
            let b = assemble_surface((1, 4), (1, 4), scaled, 0.05);
            prop_assert_eq!(a.suggested, b.suggested);
        }
    }
}
