use rayon::prelude::*;

use super::DenseMatrix;
use crate::{Error, Real, Result};

/// Magnitude below which spgemm output entries are treated as structural zeros.
const SPGEMM_DROP: f64 = 1e-300;

/// Compressed-sparse-row matrix with sorted, unique column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SparseMatrix<T> {
    /// Validates raw CSR arrays.
    pub fn try_from_csr(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if indptr.len() != rows + 1 {
            return Err(Error::format(format!(
                "row offsets have length {}, expected {}",
                indptr.len(),
                rows + 1
            )));
        }
        if indptr[0] != 0 || indptr[rows] != indices.len() || indices.len() != values.len() {
            return Err(Error::format("inconsistent CSR offsets"));
        }
        for i in 0..rows {
            let (lo, hi) = (indptr[i], indptr[i + 1]);
            if lo > hi || hi > indices.len() {
                return Err(Error::format(format!("row {i} offsets decrease")));
            }
            let row = &indices[lo..hi];
            if row.iter().any(|&c| c >= cols) {
                return Err(Error::format(format!("row {i} has a column index out of bounds")));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::format(format!(
                    "row {i} column indices are not strictly increasing"
                )));
            }
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("stored value {p}")));
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub(crate) fn from_csr_unchecked(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<T>,
    ) -> Self {
        debug_assert_eq!(indptr.len(), rows + 1);
        debug_assert_eq!(indices.len(), values.len());
        Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    /// Builds from per-row `(column, value)` lists; each list must already be
    /// sorted by column with no duplicates.
    pub(crate) fn from_sorted_rows(cols: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let nrows = rows.len();
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for row in rows {
            for (c, v) in row {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self::from_csr_unchecked(nrows, cols, indptr, indices, values)
    }

    /// Assembles from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, T)>> = vec![Vec::new(); rows];
        for &(i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::dims(format!(
                    "triplet ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("triplet ({i}, {j})")));
            }
            per_row[i].push((j, v));
        }
        for row in &mut per_row {
            row.sort_by_key(|e| e.0);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
        }
        Ok(Self::from_sorted_rows(cols, per_row))
    }

    /// Converts a dense matrix, dropping exact zeros.
    pub fn from_dense(m: &DenseMatrix<T>) -> Self {
        let rows = m
            .row_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != T::zero())
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Self::from_sorted_rows(m.cols(), rows)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![T::one(); n])
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_csr_unchecked(n, n, (0..=n).collect(), (0..n).collect(), diag.to_vec())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (idx, val) = self.row(i);
        idx.binary_search(&j).map_or(T::zero(), |p| val[p])
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            let drow = d.row_mut(i);
            for (&j, &v) in idx.iter().zip(val) {
                drow[j] = v;
            }
        }
        d
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        // rows are visited in increasing order, so each output row stays sorted
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                let p = next[j];
                indices[p] = i;
                values[p] = v;
                next[j] += 1;
            }
        }
        Self::from_csr_unchecked(self.cols, self.rows, indptr, indices, values)
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).1.iter().copied().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                sums[j] += v;
            }
        }
        sums
    }

    /// Multiplies row `i` by `factors[i]`, keeping the sparsity pattern.
    pub fn scale_rows(&self, factors: &[T]) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows {
            let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
            out.values[lo..hi].iter_mut().for_each(|v| *v *= factors[i]);
        }
        out
    }

    /// Multiplies column `j` by `factors[j]`, keeping the sparsity pattern.
    pub fn scale_cols(&self, factors: &[T]) -> Self {
        let mut out = self.clone();
        for (v, &j) in out.values.iter_mut().zip(&self.indices) {
            *v *= factors[j];
        }
        out
    }

    /// `self · rhs` for a dense right-hand side; parallel over output rows.
    pub fn mul_dense(&self, rhs: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.cols != rhs.rows() {
            return Err(Error::dims(format!(
                "cannot multiply sparse {}x{} by {}x{}",
                self.rows,
                self.cols,
                rhs.rows(),
                rhs.cols()
            )));
        }
        let width = rhs.cols();
        let mut out = DenseMatrix::zeros(self.rows, width);
        if width == 0 {
            return Ok(out);
        }
        out.as_mut_slice()
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, orow)| {
                let (idx, val) = self.row(i);
                for (&j, &a) in idx.iter().zip(val) {
                    for (o, &b) in orow.iter_mut().zip(rhs.row(j)) {
                        *o += a * b;
                    }
                }
            });
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if self.cols != x.len() {
            return Err(Error::dims(format!(
                "cannot multiply sparse {}x{} by vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                let (idx, val) = self.row(i);
                idx.iter().zip(val).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect())
    }

    /// Keeps only the `m` largest-magnitude entries of every row.
    pub fn truncate_rows(&self, m: usize) -> Self {
        let rows = (0..self.rows)
            .map(|i| {
                let (idx, val) = self.row(i);
                let mut entries: Vec<(usize, T)> = idx.iter().copied().zip(val.iter().copied()).collect();
                if entries.len() > m {
                    entries.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap().then(a.0.cmp(&b.0)));
                    entries.truncate(m);
                    entries.sort_by_key(|e| e.0);
                }
                entries
            })
            .collect();
        Self::from_sorted_rows(self.cols, rows)
    }
}

/// Exact sparse-sparse product `a · b` (row-wise Gustavson).
///
/// Each output row is accumulated in the order the entries of `a` and `b`
/// are stored, so the result does not depend on thread scheduling.
pub fn spgemm<T: Real>(a: &SparseMatrix<T>, b: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
    if a.cols != b.rows {
        return Err(Error::dims(format!(
            "cannot multiply sparse {}x{} by sparse {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let drop = T::lit(SPGEMM_DROP);
    let ncols = b.cols;
    let rows: Vec<Vec<(usize, T)>> = (0..a.rows)
        .into_par_iter()
        .map_init(
            || (vec![T::zero(); ncols], vec![false; ncols], Vec::new()),
            |(acc, seen, touched), i| {
                let (aidx, aval) = a.row(i);
                for (&k, &av) in aidx.iter().zip(aval) {
                    let (bidx, bval) = b.row(k);
                    for (&j, &bv) in bidx.iter().zip(bval) {
                        if !seen[j] {
                            seen[j] = true;
                            touched.push(j);
                        }
                        acc[j] += av * bv;
                    }
                }
                touched.sort_unstable();
                let mut row = Vec::with_capacity(touched.len());
                for &j in touched.iter() {
                    let v = acc[j];
                    if v.abs() >= drop {
                        row.push((j, v));
                    }
                    acc[j] = T::zero();
                    seen[j] = false;
                }
                touched.clear();
                row
            },
        )
        .collect();
    Ok(SparseMatrix::from_sorted_rows(ncols, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> SparseMatrix<f64> {
        SparseMatrix::from_dense(&DenseMatrix::from_rows(rows).unwrap())
    }

    #[test]
    fn validates_csr() {
        assert!(SparseMatrix::<f64>::try_from_csr(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::<f64>::try_from_csr(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        assert!(SparseMatrix::<f64>::try_from_csr(1, 2, vec![0, 1], vec![1], vec![f64::INFINITY]).is_err());
        assert!(SparseMatrix::<f64>::try_from_csr(1, 2, vec![0, 1], vec![1], vec![2.0]).is_ok());
    }

    #[test]
    fn spgemm_hand_computed() {
        let a = m(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let b = m(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let c = spgemm(&a, &b).unwrap();
        assert_eq!(c.to_dense().as_slice(), &[0.0, 1.0, 2.0, 0.0]);
        assert_eq!(c.nnz(), 2);
    }

    #[test]
    fn spgemm_identity_and_mismatch() {
        let b = m(&[vec![1.0, 0.0, 3.0], vec![0.0, -2.0, 0.5]]);
        assert_eq!(spgemm(&SparseMatrix::identity(2), &b).unwrap(), b);
        assert!(spgemm(&b, &b).is_err());
    }

    #[test]
    fn spgemm_drops_tiny_and_cancelled() {
        let a = m(&[vec![1e-160, 1e-160]]);
        let b = m(&[vec![1.0, 1e-150], vec![-1.0, 1e-150]]);
        let c = spgemm(&a, &b).unwrap();
        assert_eq!(c.row(0).0, &[] as &[usize]);
    }

    #[test]
    fn transpose_and_sums() {
        let a = m(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 4.0]]);
        let t = a.transpose();
        assert_eq!(t.to_dense(), a.to_dense().transpose());
        assert_eq!(a.row_sums(), vec![3.0, 7.0]);
        assert_eq!(a.col_sums(), vec![1.0, 3.0, 6.0]);
        assert_eq!(a.get(1, 2), 4.0);
        assert_eq!(a.get(1, 0), 0.0);
    }

    #[test]
    fn triplets_sum_duplicates() {
        let s = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.nnz(), 2);
    }

    #[test]
    fn truncate_rows_keeps_largest() {
        let s = m(&[vec![1.0, -5.0, 3.0, 0.5]]);
        let t = s.truncate_rows(2);
        assert_eq!(t.row(0).0, &[1, 2]);
    }
}
