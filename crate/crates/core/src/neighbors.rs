//! Exact k-nearest-neighbor search by brute force.

use rayon::prelude::*;

use crate::linalg::{sq_dist, DenseMatrix};
use crate::{Error, Real, Result};

/// Neighbor lists for a batch of queries, stored flat (`k` entries per query).
///
/// Within a query, entries are ordered by squared distance and then by
/// reference index.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnResult<T> {
    pub k: usize,
    pub indices: Vec<usize>,
    /// Squared Euclidean distances.
    pub distances: Vec<T>,
}

impl<T> KnnResult<T> {
    pub fn n_queries(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.indices.len() / self.k
        }
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.indices[q * self.k..(q + 1) * self.k]
    }

    pub fn distances(&self, q: usize) -> &[T] {
        &self.distances[q * self.k..(q + 1) * self.k]
    }
}

/// Finds the `k` nearest rows of `reference` for every row of `queries`.
///
/// With `include_self == false` the queries are taken to be the reference set
/// itself and query row `i` never reports reference index `i`.
pub fn knn_search<T: Real>(
    reference: &DenseMatrix<T>,
    queries: &DenseMatrix<T>,
    k: usize,
    include_self: bool,
) -> Result<KnnResult<T>> {
    let n = reference.rows();
    if reference.cols() != queries.cols() {
        return Err(Error::dims(format!(
            "reference has {} columns, queries have {}",
            reference.cols(),
            queries.cols()
        )));
    }
    if !include_self && queries.rows() != n {
        return Err(Error::dims(
            "excluding self requires the queries to be the reference set",
        ));
    }
    let available = if include_self { n } else { n.saturating_sub(1) };
    if k == 0 || k > available {
        return Err(Error::arg(format!("k = {k} outside 1..={available}")));
    }

    let per_query: Vec<(Vec<usize>, Vec<T>)> = (0..queries.rows())
        .into_par_iter()
        .map(|q| nearest(reference, queries.row(q), k, (!include_self).then_some(q)))
        .collect();
    let mut indices = Vec::with_capacity(k * per_query.len());
    let mut distances = Vec::with_capacity(k * per_query.len());
    for (i, d) in per_query {
        indices.extend(i);
        distances.extend(d);
    }
    Ok(KnnResult { k, indices, distances })
}

/// Bounded insertion into a sorted list; the scan goes in ascending index
/// order and only strictly closer points displace earlier ones, which yields
/// the (distance, index) order.
fn nearest<T: Real>(
    reference: &DenseMatrix<T>,
    query: &[T],
    k: usize,
    skip: Option<usize>,
) -> (Vec<usize>, Vec<T>) {
    let mut idx: Vec<usize> = Vec::with_capacity(k + 1);
    let mut dist: Vec<T> = Vec::with_capacity(k + 1);
    for (j, row) in reference.row_iter().enumerate() {
        if skip == Some(j) {
            continue;
        }
        let d = sq_dist(query, row);
        if idx.len() == k && d >= dist[k - 1] {
            continue;
        }
        let pos = dist.partition_point(|&x| x <= d);
        dist.insert(pos, d);
        idx.insert(pos, j);
        if idx.len() > k {
            dist.pop();
            idx.pop();
        }
    }
    (idx, dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    #[test]
    fn hand_computed_line() {
        let r = line(&[0.0, 1.0, 3.0]);
        let res = knn_search(&r, &r, 2, false).unwrap();
        assert_eq!(res.neighbors(0), &[1, 2]);
        assert_eq!(res.distances(0), &[1.0, 9.0]);
    }

    #[test]
    fn tie_goes_to_smaller_index() {
        let r = line(&[-1.0, 1.0]);
        let res = knn_search(&r, &line(&[0.0]), 1, true).unwrap();
        assert_eq!(res.neighbors(0), &[0]);
    }

    #[test]
    fn self_appears_first_when_included() {
        let r = line(&[0.0, 5.0, 2.0]);
        let res = knn_search(&r, &r, 3, true).unwrap();
        for q in 0..3 {
            assert_eq!(res.neighbors(q)[0], q);
            assert_eq!(res.distances(q)[0], 0.0);
        }
    }

    #[test]
    fn range_and_shape_errors() {
        let r = line(&[0.0, 1.0]);
        assert!(knn_search(&r, &r, 2, false).is_err());
        assert!(knn_search(&r, &r, 3, true).is_err());
        assert!(knn_search(&r, &r, 0, true).is_err());
        let two = DenseMatrix::<f64>::zeros(1, 2);
        assert!(knn_search(&r, &two, 1, true).is_err());
    }
}
