#![allow(dead_code)]

use biarch_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Projected gradient descent on `|Ax - b|^2` over `x >= 0`, step `1/L`.
pub fn nnls_projected_gradient(a: &Matrix, b: &[f64], iters: usize) -> Vec<f64> {
    let ata = a.transpose().matmul(a).unwrap();
    let atb = a.tr_mul_vec(b);
    let lipschitz = a.singular_values()[0].powi(2);
    let k = a.cols();
    let mut x = vec![0.0; k];
    for _ in 0..iters {
        let grad: Vec<f64> = (0..k)
            .map(|i| (0..k).map(|j| ata[(i, j)] * x[j]).sum::<f64>() - atb[i])
            .collect();
        let next: Vec<f64> = (0..k).map(|i| (x[i] - grad[i] / lipschitz).max(0.0)).collect();
        let moved = next.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        x = next;
        if moved < 1e-14 {
            break;
        }
    }
    x
}

/// Smallest `|Aw - b|^2` over the simplex grid with the given number of
/// steps per unit (k <= 3).
pub fn simplex_grid_min(a: &Matrix, b: &[f64], steps: usize) -> f64 {
    let k = a.cols();
    let h = 1.0 / steps as f64;
    let eval = |w: &[f64]| {
        (0..a.rows())
            .map(|i| {
                let r = (0..k).map(|j| a[(i, j)] * w[j]).sum::<f64>() - b[i];
                r * r
            })
            .sum::<f64>()
    };
    match k {
        1 => eval(&[1.0]),
        2 => (0..=steps)
            .map(|i| eval(&[i as f64 * h, 1.0 - i as f64 * h]))
            .fold(f64::INFINITY, f64::min),
        3 => {
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let (u, v) = (i as f64 * h, j as f64 * h);
                    best = best.min(eval(&[u, v, (1.0 - u - v).max(0.0)]));
                }
            }
            best
        }
        _ => panic!("grid oracle supports k <= 3"),
    }
}

pub fn sq_err(a: &Matrix, w: &[f64], b: &[f64]) -> f64 {
    a.mul_vec(w).iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Vertices of the convex hull of 2-D points (monotone chain).
pub fn hull_vertices(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Largest entry difference between `z` and `reference` after the best
/// simultaneous row and column relabeling of `z`.
pub fn matched_max_diff(z: &Matrix, reference: &Matrix) -> f64 {
    assert_eq!(z.shape(), reference.shape());
    let (k, c) = z.shape();
    let mut best = f64::INFINITY;
    for pr in permutations(k) {
        for pc in permutations(c) {
            let d = (0..k)
                .flat_map(|i| (0..c).map(move |j| (i, j)))
                .map(|(i, j)| (z[(pr[i], pc[j])] - reference[(i, j)]).abs())
                .fold(0.0, f64::max);
            best = best.min(d);
        }
    }
    best
}

/// Exact optimum of the toy matrix with two row archetypes and one column
/// archetype, by brute force over archetype pairs `z1 <= z2` in `[lo, hi]`:
/// each row is fitted by a constant clamped into `[z1, z2]`.
pub fn one_column_pair_oracle(x: &Matrix, lo: f64, hi: f64, step: f64) -> f64 {
    let means: Vec<f64> = x.row_iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect();
    let cost = |z1: f64, z2: f64| {
        x.row_iter()
            .zip(&means)
            .map(|(r, &mu)| {
                let a = mu.clamp(z1, z2);
                r.iter().map(|v| (v - a) * (v - a)).sum::<f64>()
            })
            .sum::<f64>()
    };
    let steps = ((hi - lo) / step).round() as usize;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        for j in i..=steps {
            best = best.min(cost(lo + i as f64 * step, lo + j as f64 * step));
        }
    }
    best
}

/// Unit square corners followed by `interior` points strictly inside.
pub fn square_corner_cloud(interior: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    let mut rows = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    for _ in 0..interior {
        rows.push([r.gen_range(0.05..0.95), r.gen_range(0.05..0.95)]);
    }
    Matrix::from_rows(&rows).unwrap()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Mean Pearson correlation over row pairs in the same group and over row
/// pairs in different groups.
pub fn mean_row_correlations(x: &Matrix, labels: &[usize]) -> (f64, f64) {
    let (mut within, mut nw, mut across, mut na) = (0.0, 0, 0.0, 0);
    for i in 0..x.rows() {
        for j in i + 1..x.rows() {
            let r = pearson(x.row(i), x.row(j));
            if labels[i] == labels[j] {
                within += r;
                nw += 1;
            } else {
                across += r;
                na += 1;
            }
        }
    }
    (within / nw as f64, across / na as f64)
}
