use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{restart_stream, uniform01, StreamRng};
use crate::types::DataMatrix;

/// Hard biclustering: every row belongs to one of `k` row groups, every
/// column to one of `c` column groups, and each block is summarized by its
/// mean.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleKMeansModel {
    /// Row labels, 0-based, in `0..k`.
    pub row_assign: Vec<usize>,
    /// Column labels, 0-based, in `0..c`.
    pub col_assign: Vec<usize>,
    /// k x c block means.
    pub centroids: Matrix,
    pub rss: f64,
    pub iterations: usize,
    /// RSS at initialization followed by the RSS after every full sweep.
    pub rss_trace: Vec<f64>,
    pub converged: bool,
}

impl DoubleKMeansModel {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn c(&self) -> usize {
        self.centroids.cols()
    }
}

/// Alternates hard row assignment, hard column assignment and block-mean
/// updates until no label changes or `max_iter` sweeps have run.
///
/// Both partitions are seeded by k-means++ on the rows and on the columns.
/// A group that ends up empty takes over the worst-fitting member of a
/// group with at least two members. Assignment ties go to the lowest
/// group index.
pub fn fit_double_kmeans(
    x: &DataMatrix,
    k: usize,
    c: usize,
    seed: u64,
    max_iter: usize,
) -> Result<DoubleKMeansModel> {
    let (n, m) = (x.n(), x.m());
    if k == 0 || k > n {
        return Err(Error::mismatch("fit_double_kmeans: k", (1, n), (k, n)));
    }
    if c == 0 || c > m {
        return Err(Error::mismatch("fit_double_kmeans: c", (1, m), (c, m)));
    }
    let xv = x.values();
    let xt = xv.transpose();
    let mut rng = restart_stream(seed, 0);

    let mut rows = kmeanspp_labels(xv, k, &mut rng);
    let mut cols = kmeanspp_labels(&xt, c, &mut rng);
    let mut z = block_means(xv, &rows, &cols, k, c);
    repair(xv, &mut rows, &cols, &mut z, k);
    z = block_means(xv, &rows, &cols, k, c);
    repair(&xt, &mut cols, &rows, &mut z.transpose(), c);
    z = block_means(xv, &rows, &cols, k, c);

    let mut trace = vec![block_rss(xv, &rows, &cols, &z)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut changed = assign(xv, &mut rows, &cols, &z);
        changed |= repair(xv, &mut rows, &cols, &mut z, k);
        z = block_means(xv, &rows, &cols, k, c);

        let mut zt = z.transpose();
        changed |= assign(&xt, &mut cols, &rows, &zt);
        changed |= repair(&xt, &mut cols, &rows, &mut zt, c);
        z = block_means(xv, &rows, &cols, k, c);

        trace.push(block_rss(xv, &rows, &cols, &z));
        if !changed {
            converged = true;
            break;
        }
    }

    Ok(DoubleKMeansModel {
        rss: *trace.last().unwrap(),
        row_assign: rows,
        col_assign: cols,
        centroids: z,
        iterations,
        rss_trace: trace,
        converged,
    })
}

/// Cost of giving row `i` of `x` the centroid row `g`, where `z` is laid out
/// as (row groups) x (column groups).
fn row_cost(x: &Matrix, i: usize, cols: &[usize], z: &Matrix, g: usize) -> f64 {
    x.row(i)
        .iter()
        .zip(cols)
        .map(|(&v, &h)| {
            let d = v - z[(g, h)];
            d * d
        })
        .sum()
}

/// Reassigns every row to its cheapest group; returns whether a label moved.
fn assign(x: &Matrix, rows: &mut [usize], cols: &[usize], z: &Matrix) -> bool {
    let mut changed = false;
    for i in 0..x.rows() {
        let mut best = (rows[i], row_cost(x, i, cols, z, rows[i]));
        for g in 0..z.rows() {
            let cost = row_cost(x, i, cols, z, g);
            if cost < best.1 || (cost == best.1 && g < best.0) {
                best = (g, cost);
            }
        }
        if best.0 != rows[i] {
            rows[i] = best.0;
            changed = true;
        }
    }
    changed
}

/// Fills empty groups with the worst-fitting row of a group that can spare
/// one. `z` is updated for the filled group only.
fn repair(x: &Matrix, rows: &mut [usize], cols: &[usize], z: &mut Matrix, groups: usize) -> bool {
    let mut changed = false;
    loop {
        let mut sizes = vec![0usize; groups];
        for &g in rows.iter() {
            sizes[g] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return changed;
        };
        let donor = (0..x.rows())
            .filter(|&i| sizes[rows[i]] >= 2)
            .map(|i| (i, row_cost(x, i, cols, z, rows[i])))
            .fold(None, |best: Option<(usize, f64)>, cand| match best {
                Some(b) if b.1 >= cand.1 => Some(b),
                _ => Some(cand),
            })
            .map(|(i, _)| i)
            .expect("k <= n leaves a group with two members");
        rows[donor] = empty;
        // the new group's centroid is the donor row's own block means
        let width = z.cols();
        let mut sums = vec![0.0; width];
        let mut counts = vec![0usize; width];
        for (&v, &h) in x.row(donor).iter().zip(cols) {
            sums[h] += v;
            counts[h] += 1;
        }
        for h in 0..width {
            if counts[h] > 0 {
                z[(empty, h)] = sums[h] / counts[h] as f64;
            }
        }
        changed = true;
    }
}

fn block_means(x: &Matrix, rows: &[usize], cols: &[usize], k: usize, c: usize) -> Matrix {
    let mut sums = Matrix::zeros(k, c);
    let mut counts = Matrix::zeros(k, c);
    for (i, &g) in rows.iter().enumerate() {
        for (&v, &h) in x.row(i).iter().zip(cols) {
            sums[(g, h)] += v;
            counts[(g, h)] += 1.0;
        }
    }
    Matrix::from_fn(k, c, |g, h| {
        if counts[(g, h)] > 0.0 {
            sums[(g, h)] / counts[(g, h)]
        } else {
            0.0
        }
    })
}

fn block_rss(x: &Matrix, rows: &[usize], cols: &[usize], z: &Matrix) -> f64 {
    (0..x.rows()).map(|i| row_cost(x, i, cols, z, rows[i])).sum()
}

/// k-means++ seeding on the rows of `x`, then nearest-seed labels.
fn kmeanspp_labels(x: &Matrix, k: usize, rng: &mut StreamRng) -> Vec<usize> {
    let n = x.rows();
    let dist = |a: usize, b: usize| -> f64 {
        x.row(a)
            .iter()
            .zip(x.row(b))
            .map(|(p, q)| (p - q) * (p - q))
            .sum()
    };
    let first = ((uniform01(rng) * n as f64) as usize).min(n - 1);
    let mut seeds = vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|i| dist(i, first)).collect();
    while seeds.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = uniform01(rng) * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave acc just short of target
            pick.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // every row coincides with a seed: take the first unused row
            (0..n).find(|i| !seeds.contains(i)).unwrap()
        };
        seeds.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(dist(i, next));
        }
    }
    (0..n)
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for (g, &s) in seeds.iter().enumerate() {
                let d = dist(i, s);
                if d < best.1 {
                    best = (g, d);
                }
            }
            best.0
        })
        .collect()
}
