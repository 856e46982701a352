#![allow(dead_code)]

use ncca_core::linalg::{DenseMatrix, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type M = DenseMatrix<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> M {
    M::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random sparse matrix with `per_row` distinct nonzeros in each row.
pub fn random_sparse(rows: usize, cols: usize, per_row: usize, rng: &mut ChaCha8Rng) -> SparseMatrix<f64> {
    let mut triplets = Vec::new();
    for i in 0..rows {
        let mut chosen = Vec::new();
        while chosen.len() < per_row.min(cols) {
            let j = rng.gen_range(0..cols);
            if !chosen.contains(&j) {
                chosen.push(j);
                triplets.push((i, j, rng.sample::<f64, _>(StandardNormal)));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, &triplets).unwrap()
}

/// `(1/N) PᵀP`.
pub fn second_moment(p: &M) -> M {
    p.gram()
}

pub fn identity_error(m: &M) -> f64 {
    m.max_abs_diff(&M::identity(m.rows()))
}

/// Largest entrywise gap after flipping each column of `b` toward `a`.
pub fn sign_aligned_diff(a: &M, b: &M) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut worst = 0.0f64;
    for j in 0..a.cols() {
        let dot: f64 = (0..a.rows()).map(|i| a[(i, j)] * b[(i, j)]).sum();
        let s = if dot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..a.rows() {
            worst = worst.max((a[(i, j)] - s * b[(i, j)]).abs());
        }
    }
    worst
}

/// Plain triple-loop product.
pub fn naive_matmul(a: &M, b: &M) -> M {
    assert_eq!(a.cols(), b.rows());
    M::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|l| a[(i, l)] * b[(l, j)]).sum())
}

pub fn naive_transpose(a: &M) -> M {
    M::from_fn(a.cols(), a.rows(), |i, j| a[(j, i)])
}

/// Centered covariance `(1/N) XcᵀXc` by direct summation.
pub fn covariance(x: &M) -> M {
    let n = x.rows() as f64;
    let d = x.cols();
    let mean: Vec<f64> = (0..d).map(|j| (0..x.rows()).map(|i| x[(i, j)]).sum::<f64>() / n).collect();
    M::from_fn(d, d, |a, b| {
        (0..x.rows()).map(|i| (x[(i, a)] - mean[a]) * (x[(i, b)] - mean[b])).sum::<f64>() / n
    })
}

pub fn sample_corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Sign of the largest-magnitude entry of each column is positive.
pub fn has_sign_convention(m: &M) -> bool {
    (0..m.cols()).all(|j| {
        let col = m.column(j);
        let max = col.iter().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { *v } else { acc });
        max >= 0.0
    })
}
