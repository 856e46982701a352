//! Gaussian kernel affinities truncated to k nearest neighbors, and their
//! stochastic normalisations.
//!
//! The training matrix keeps entry `(i, j)` when `i` is among the `k` nearest
//! neighbors of `j` or `i == j`, so every column holds `k` or `k + 1` entries
//! before normalisation. Test-time rows keep the `k` nearest training points.

use rayon::prelude::*;

use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::neighbors::{knn_search, KnnResult};
use crate::{Error, Real, Result};

/// Affinities below this magnitude are dropped from the sparsity pattern.
pub const UNDERFLOW: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth<T> {
    Explicit(T),
    /// A fraction of the mean (uncentered) sample L2 norm.
    FractionOfMeanNorm(T),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffinityConfig<T> {
    pub bandwidth: Bandwidth<T>,
    pub k: usize,
    /// Keep `(i, j)` when either point is a neighbor of the other.
    pub mutual: bool,
}

impl<T: Real> Default for AffinityConfig<T> {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::FractionOfMeanNorm(T::lit(0.45)),
            k: 15,
            mutual: false,
        }
    }
}

impl<T: Real> AffinityConfig<T> {
    pub fn with_sigma(sigma: T, k: usize) -> Self {
        Self {
            bandwidth: Bandwidth::Explicit(sigma),
            k,
            mutual: false,
        }
    }

    pub fn with_fraction(fraction: T, k: usize) -> Self {
        Self {
            bandwidth: Bandwidth::FractionOfMeanNorm(fraction),
            k,
            mutual: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::arg("neighbor count k must be at least 1"));
        }
        match self.bandwidth {
            Bandwidth::Explicit(s) if !(s > T::zero() && s.is_finite()) => {
                Err(Error::arg(format!("bandwidth must be positive and finite, got {s}")))
            }
            Bandwidth::FractionOfMeanNorm(f) if !(f > T::zero() && f <= T::one()) => {
                Err(Error::arg(format!("bandwidth fraction must lie in (0, 1], got {f}")))
            }
            _ => Ok(()),
        }
    }

    /// The bandwidth σ for these points.
    pub fn sigma(&self, points: &DenseMatrix<T>) -> Result<T> {
        self.validate()?;
        match self.bandwidth {
            Bandwidth::Explicit(s) => Ok(s),
            Bandwidth::FractionOfMeanNorm(f) => default_bandwidth(points, f),
        }
    }

    /// Same config with the bandwidth fixed to an explicit σ.
    pub fn resolve(&self, points: &DenseMatrix<T>) -> Result<Self> {
        Ok(Self {
            bandwidth: Bandwidth::Explicit(self.sigma(points)?),
            ..self.clone()
        })
    }
}

/// `fraction` times the mean L2 norm of the rows of `points`.
pub fn default_bandwidth<T: Real>(points: &DenseMatrix<T>, fraction: T) -> Result<T> {
    if points.rows() == 0 {
        return Err(Error::arg("cannot pick a bandwidth for an empty dataset"));
    }
    if !(fraction > T::zero() && fraction <= T::one()) {
        return Err(Error::arg(format!("bandwidth fraction must lie in (0, 1], got {fraction}")));
    }
    let total: T = points
        .row_iter()
        .map(|r| r.iter().map(|&v| v * v).sum::<T>().sqrt())
        .sum();
    let sigma = fraction * total / T::from_count(points.rows());
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::arg("all samples are zero; bandwidth would vanish"));
    }
    Ok(sigma)
}

#[inline]
fn kernel<T: Real>(sq_dist: T, two_sigma_sq: T) -> T {
    (-sq_dist / two_sigma_sq).exp()
}

/// N×N truncated Gaussian affinity matrix of `points`.
pub fn gaussian_affinity<T: Real>(
    points: &DenseMatrix<T>,
    config: &AffinityConfig<T>,
) -> Result<SparseMatrix<T>> {
    let sigma = config.sigma(points)?;
    let n = points.rows();
    if config.k > n {
        return Err(Error::arg(format!("k = {} exceeds the {n} available points", config.k)));
    }
    let knn = knn_search(points, points, config.k, true)?;
    affinity_from_neighbors(n, &knn, sigma, config.mutual)
}

/// Builds the training affinity matrix from precomputed neighbor lists of the
/// training points against themselves (`include_self = true`).
pub fn affinity_from_neighbors<T: Real>(
    n: usize,
    knn: &KnnResult<T>,
    sigma: T,
    mutual: bool,
) -> Result<SparseMatrix<T>> {
    if knn.n_queries() != n {
        return Err(Error::dims(format!(
            "neighbor lists cover {} points, expected {n}",
            knn.n_queries()
        )));
    }
    let two_sigma_sq = T::lit(2.0) * sigma * sigma;
    let floor = T::lit(UNDERFLOW);
    // row j of this matrix lists the neighbors of j, i.e. column j of W
    let rows: Vec<Vec<(usize, T)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut row: Vec<(usize, T)> = knn
                .neighbors(j)
                .iter()
                .zip(knn.distances(j))
                .filter(|&(&i, _)| i != j)
                .map(|(&i, &d)| (i, kernel(d, two_sigma_sq)))
                .filter(|&(_, w)| w >= floor)
                .collect();
            row.push((j, T::one()));
            row.sort_unstable_by_key(|&(i, _)| i);
            row
        })
        .collect();
    let by_column = SparseMatrix::from_sorted_rows(n, rows);
    let w = by_column.transpose();
    if !mutual {
        return Ok(w);
    }
    // the kernel is symmetric, so the union of both patterns is a merge
    let merged: Vec<Vec<(usize, T)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (ai, av) = w.row(i);
            let (bi, bv) = by_column.row(i);
            let mut out = Vec::with_capacity(ai.len() + bi.len());
            let (mut p, mut q) = (0, 0);
            while p < ai.len() || q < bi.len() {
                if q == bi.len() || (p < ai.len() && ai[p] < bi[q]) {
                    out.push((ai[p], av[p]));
                    p += 1;
                } else if p == ai.len() || bi[q] < ai[p] {
                    out.push((bi[q], bv[q]));
                    q += 1;
                } else {
                    out.push((ai[p], av[p]));
                    p += 1;
                    q += 1;
                }
            }
            out
        })
        .collect();
    Ok(SparseMatrix::from_sorted_rows(n, merged))
}

/// Scales rows to sum to one.
pub fn normalize_right_stochastic<T: Real>(w: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
    let sums = w.row_sums();
    let mut inv = Vec::with_capacity(sums.len());
    for (i, s) in sums.into_iter().enumerate() {
        if !(s > T::zero()) {
            return Err(Error::ZeroRow(i));
        }
        inv.push(T::one() / s);
    }
    Ok(w.scale_rows(&inv))
}

/// Scales columns to sum to one.
pub fn normalize_left_stochastic<T: Real>(w: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
    let sums = w.col_sums();
    let mut inv = Vec::with_capacity(sums.len());
    for (j, s) in sums.into_iter().enumerate() {
        if !(s > T::zero()) {
            return Err(Error::ZeroColumn(j));
        }
        inv.push(T::one() / s);
    }
    Ok(w.scale_cols(&inv))
}

/// Normalised affinities from one query to its nearest training points,
/// sorted by training index.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityRow<T> {
    pub indices: Vec<usize>,
    pub weights: Vec<T>,
}

/// Affinity row of a single query against the training points.
pub fn affinity_row<T: Real>(
    query: &[T],
    train_points: &DenseMatrix<T>,
    config: &AffinityConfig<T>,
) -> Result<AffinityRow<T>> {
    let q = DenseMatrix::new(1, query.len(), query.to_vec())?;
    let mut rows = affinity_rows(&q, train_points, config)?;
    Ok(rows.pop().expect("one query"))
}

/// Affinity rows for a batch of queries. A `FractionOfMeanNorm` bandwidth is
/// resolved against `train_points`.
pub fn affinity_rows<T: Real>(
    queries: &DenseMatrix<T>,
    train_points: &DenseMatrix<T>,
    config: &AffinityConfig<T>,
) -> Result<Vec<AffinityRow<T>>> {
    let sigma = config.sigma(train_points)?;
    if train_points.rows() == 0 {
        return Err(Error::arg("no training points"));
    }
    if config.k > train_points.rows() {
        return Err(Error::arg(format!(
            "k = {} exceeds the {} training points",
            config.k,
            train_points.rows()
        )));
    }
    if queries.rows() == 0 {
        if queries.cols() != train_points.cols() {
            return Err(Error::dims(format!(
                "queries have {} columns, training points {}",
                queries.cols(),
                train_points.cols()
            )));
        }
        return Ok(Vec::new());
    }
    let knn = knn_search(train_points, queries, config.k, true)?;
    let two_sigma_sq = T::lit(2.0) * sigma * sigma;
    let floor = T::lit(UNDERFLOW);
    (0..queries.rows())
        .into_par_iter()
        .map(|q| {
            let mut pairs: Vec<(usize, T)> = knn
                .neighbors(q)
                .iter()
                .zip(knn.distances(q))
                .map(|(&i, &d)| (i, kernel(d, two_sigma_sq)))
                .filter(|&(_, w)| w >= floor)
                .collect();
            if pairs.is_empty() {
                return Err(Error::Underflow { sigma: sigma.as_f64() });
            }
            pairs.sort_unstable_by_key(|&(i, _)| i);
            let total: T = pairs.iter().map(|&(_, w)| w).sum();
            Ok(AffinityRow {
                indices: pairs.iter().map(|&(i, _)| i).collect(),
                weights: pairs.iter().map(|&(_, w)| w / total).collect(),
            })
        })
        .collect()
}
