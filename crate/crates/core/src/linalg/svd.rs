use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dense::dot;
use super::eigen::fix_column_signs;
use super::DenseMatrix;
use crate::{Error, Real, Result};

const MAX_SWEEPS: usize = 80;

/// Singular triplets `A ≈ U · diag(σ) · Vᵀ`.
///
/// `σ` is non-increasing and nonnegative; the largest-magnitude entry of each
/// column of `U` is positive.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdResult<T> {
    pub u: DenseMatrix<T>,
    pub singular_values: Vec<T>,
    pub v: DenseMatrix<T>,
}

impl<T: Real> SvdResult<T> {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U · diag(σ) · Vᵀ`
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        self.u
            .scale_columns(&self.singular_values)
            .matmul(&self.v.transpose())
            .expect("factor shapes agree")
    }

    /// Keeps the leading `r` triplets.
    pub fn truncate(mut self, r: usize) -> Self {
        let r = r.min(self.rank());
        self.u = self.u.select_columns(0..r);
        self.v = self.v.select_columns(0..r);
        self.singular_values.truncate(r);
        self
    }
}

/// Full thin SVD by one-sided Jacobi rotations; returns `min(rows, cols)` triplets.
pub fn dense_svd<T: Real>(m: &DenseMatrix<T>) -> Result<SvdResult<T>> {
    m.check_finite()?;
    if m.rows() < m.cols() {
        let t = dense_svd(&m.transpose())?;
        let mut out = SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
        fix_column_signs(&mut out.u, Some(&mut out.v));
        return Ok(out);
    }
    let (rows, cols) = m.shape();
    let mut a = m.columns();
    let mut v: Vec<Vec<T>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();
    // columns below this squared norm are rounding noise and are left alone
    let total: T = a.iter().map(|c| dot(c, c)).sum();
    let tiny = total * eps * eps;
    let mut converged = false;
    let mut last_off = T::zero();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        last_off = T::zero();
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == T::zero() || alpha <= tiny || beta <= tiny {
                    continue;
                }
                let off = gamma.abs() / (alpha * beta).sqrt();
                last_off = last_off.max(off);
                if off <= eps {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "Jacobi SVD",
            iterations: MAX_SWEEPS,
            residual: last_off.as_f64(),
        });
    }

    let norms: Vec<T> = a.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap().then(x.cmp(&y)));
    let smax = norms.iter().copied().fold(T::zero(), T::max);
    let negligible = smax * eps * T::from_count(rows.max(cols));

    let mut singular_values = Vec::with_capacity(cols);
    let mut u_cols: Vec<Vec<T>> = Vec::with_capacity(cols);
    let mut v_cols = Vec::with_capacity(cols);
    let mut missing = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        let s = norms[j];
        singular_values.push(s);
        v_cols.push(v[j].clone());
        if s > negligible && s > T::zero() {
            u_cols.push(a[j].iter().map(|&x| x / s).collect());
        } else {
            u_cols.push(Vec::new());
            missing.push(slot);
        }
    }
    if !missing.is_empty() {
        complete_orthonormal(&mut u_cols, &missing, rows);
    }
    let mut u = DenseMatrix::from_columns(rows, &u_cols);
    let mut vm = DenseMatrix::from_columns(cols, &v_cols);
    fix_column_signs(&mut u, Some(&mut vm));
    Ok(SvdResult {
        u,
        singular_values,
        v: vm,
    })
}

fn rotate<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills the empty slots of `cols` with unit vectors orthogonal to all others.
fn complete_orthonormal<T: Real>(cols: &mut [Vec<T>], missing: &[usize], dim: usize) {
    let mut candidate = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for &slot in missing {
        loop {
            let mut w: Vec<T> = if candidate < dim {
                let mut e = vec![T::zero(); dim];
                e[candidate] = T::one();
                e
            } else {
                super::truncated::gaussian_vector(dim, &mut rng)
            };
            candidate += 1;
            for _ in 0..2 {
                for c in cols.iter().filter(|c| !c.is_empty()) {
                    let proj = dot(&w, c);
                    w.iter_mut().zip(c).for_each(|(wi, &ci)| *wi -= proj * ci);
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > T::lit(1e-3) {
                w.iter_mut().for_each(|x| *x /= norm);
                cols[slot] = w;
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig;
    use rand::Rng;

    fn random(n: usize, m: usize, seed: u64) -> DenseMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn assert_orthonormal(m: &DenseMatrix<f64>, tol: f64) {
        let g = m.t_matmul(m).unwrap();
        assert!(g.max_abs_diff(&DenseMatrix::identity(m.cols())) <= tol);
    }

    #[test]
    fn diagonal_values() {
        let s = dense_svd(&DenseMatrix::from_diag(&[1.0, 3.0, 2.0])).unwrap();
        assert_eq!(s.singular_values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn rank_one_outer_product() {
        let a = [1.0, -2.0, 2.0];
        let b = [3.0, 4.0];
        let m: DenseMatrix<f64> = DenseMatrix::from_fn(3, 2, |i, j| a[i] * b[j]);
        let s = dense_svd(&m).unwrap();
        assert!((s.singular_values[0] - 15.0).abs() < 1e-13);
        assert!(s.singular_values[1].abs() < 1e-13);
        assert_orthonormal(&s.u, 1e-12);
        assert_orthonormal(&s.v, 1e-12);
    }

    #[test]
    fn random_matches_gram_eigenvalues() {
        let m = random(30, 20, 5);
        let s = dense_svd(&m).unwrap();
        let e = sym_eig(&m.t_matmul(&m).unwrap()).unwrap();
        for (sv, ev) in s.singular_values.iter().zip(&e.values) {
            assert!((sv - ev.max(0.0).sqrt()).abs() <= 1e-9);
        }
        let rel = s.reconstruct().sub(&m).unwrap().frobenius_norm() / m.frobenius_norm();
        assert!(rel <= 1e-10);
        assert_orthonormal(&s.u, 1e-10);
        assert_orthonormal(&s.v, 1e-10);
    }

    #[test]
    fn wide_matrix_via_transpose() {
        let m = random(7, 12, 9);
        let s = dense_svd(&m).unwrap();
        assert_eq!(s.u.shape(), (7, 7));
        assert_eq!(s.v.shape(), (12, 7));
        let rel = s.reconstruct().sub(&m).unwrap().frobenius_norm() / m.frobenius_norm();
        assert!(rel <= 1e-10);
        for j in 0..7 {
            let col = s.u.column(j);
            let big = col.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn zero_matrix_has_orthonormal_factors() {
        let s = dense_svd(&DenseMatrix::<f64>::zeros(4, 3)).unwrap();
        assert!(s.singular_values.iter().all(|&x| x == 0.0));
        assert_orthonormal(&s.u, 1e-12);
        assert_orthonormal(&s.v, 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = DenseMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = f64::INFINITY;
        assert!(dense_svd(&m).is_err());
    }
}
