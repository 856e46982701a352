//! Symmetric eigendecomposition (Householder tridiagonalisation followed by
//! implicit QL) and the PSD inverse square root built on it.

use super::DenseMatrix;
use crate::{Error, Real, Result};

/// Relative eigenvalue floor used by [`inv_sqrt_psd`] when none is given.
pub const DEFAULT_RELATIVE_FLOOR: f64 = 1e-10;
/// Eigenvalues below `-NEGATIVE_TOLERANCE * λmax` mean the input is not PSD
/// (relaxed to `100 ε` for types with less precision).
const NEGATIVE_TOLERANCE: f64 = 1e-8;

/// Eigenvalues in descending order with matching unit eigenvectors (as columns).
#[derive(Clone, Debug)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: DenseMatrix<T>,
}

/// Eigendecomposition of a symmetric matrix. The input is symmetrised as
/// `(M + Mᵀ)/2` first. Each eigenvector is signed so that its
/// largest-magnitude entry is positive.
pub fn sym_eig<T: Real>(m: &DenseMatrix<T>) -> Result<SymEigen<T>> {
    if !m.is_square() {
        return Err(Error::dims(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    m.check_finite()?;
    let n = m.rows();
    if n == 0 {
        return Ok(SymEigen {
            values: Vec::new(),
            vectors: DenseMatrix::zeros(0, 0),
        });
    }
    let half = T::lit(0.5);
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| half * (m[(i, j)] + m[(j, i)])).collect())
        .collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    tridiagonal_ql(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap().then(a.cmp(&b)));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = DenseMatrix::from_fn(n, n, |i, j| v[i][order[j]]);
    fix_column_signs(&mut vectors, None);
    Ok(SymEigen { values, vectors })
}

/// Householder reduction to tridiagonal form, accumulating the transform in `v`.
fn tridiagonalize<T: Real>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = T::zero();
                v[j][i] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = T::zero();
    }
    v[n - 1][n - 1] = T::one();
    e[0] = T::zero();
}

/// Implicit QL iterations on the tridiagonal `(d, e)`.
fn tridiagonal_ql<T: Real>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let max_iter = 60 * n.max(1);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::NoConvergence {
                        what: "symmetric eigensolver",
                        iterations: iter,
                        residual: e[l].abs().as_f64(),
                    });
                }
                let mut g = d[l];
                let two = T::lit(2.0);
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        let h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Flips columns of `u` (and the matching columns of `v`) so that the
/// largest-magnitude entry of every column of `u` is positive.
pub(crate) fn fix_column_signs<T: Real>(u: &mut DenseMatrix<T>, mut v: Option<&mut DenseMatrix<T>>) {
    for j in 0..u.cols() {
        let mut best = T::zero();
        let mut sign = T::one();
        for i in 0..u.rows() {
            let x = u[(i, j)];
            if x.abs() > best {
                best = x.abs();
                sign = if x < T::zero() { -T::one() } else { T::one() };
            }
        }
        if sign < T::zero() {
            for i in 0..u.rows() {
                u[(i, j)] = -u[(i, j)];
            }
            if let Some(v) = v.as_deref_mut() {
                for i in 0..v.rows() {
                    v[(i, j)] = -v[(i, j)];
                }
            }
        }
    }
}

/// `V · diag(max(λ, floor))^p · Vᵀ` from an eigendecomposition.
pub(crate) fn spectral_function<T: Real>(eig: &SymEigen<T>, f: impl Fn(T) -> T) -> DenseMatrix<T> {
    let n = eig.values.len();
    let scaled = eig.vectors.scale_columns(&eig.values.iter().map(|&l| f(l)).collect::<Vec<_>>());
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = (0..n).map(|k| scaled[(i, k)] * eig.vectors[(j, k)]).sum::<T>();
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Inverse square root of a symmetric PSD matrix, flooring eigenvalues at
/// `eigen_floor` (default `1e-10 · λmax`).
pub fn inv_sqrt_psd<T: Real>(m: &DenseMatrix<T>, eigen_floor: Option<T>) -> Result<DenseMatrix<T>> {
    let eig = sym_eig(m)?;
    inv_sqrt_from_eigen(&eig, eigen_floor)
}

pub(crate) fn inv_sqrt_from_eigen<T: Real>(eig: &SymEigen<T>, eigen_floor: Option<T>) -> Result<DenseMatrix<T>> {
    let Some(&max) = eig.values.first() else {
        return Ok(DenseMatrix::zeros(0, 0));
    };
    let min = *eig.values.last().unwrap();
    if max <= T::zero() {
        return Err(Error::Singular(format!(
            "largest eigenvalue is {max}, no inverse square root exists"
        )));
    }
    if min < -T::lit(NEGATIVE_TOLERANCE).max(T::lit(100.0) * T::epsilon()) * max {
        return Err(Error::NotPsd {
            min: min.as_f64(),
            max: max.as_f64(),
        });
    }
    let floor = eigen_floor.unwrap_or(T::lit(DEFAULT_RELATIVE_FLOOR) * max);
    if floor < T::zero() {
        return Err(Error::arg("eigenvalue floor must be nonnegative"));
    }
    if floor == T::zero() && min <= T::zero() {
        return Err(Error::Singular("zero eigenvalue with zero floor".into()));
    }
    Ok(spectral_function(eig, |l| T::one() / l.max(floor).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, m: usize, seed: u64) -> DenseMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn reconstruct(e: &SymEigen<f64>) -> DenseMatrix<f64> {
        spectral_function(e, |l| l)
    }

    #[test]
    fn identity_and_diagonal() {
        let e = sym_eig(&DenseMatrix::<f64>::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let e = sym_eig(&DenseMatrix::from_diag(&[1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![2.0, 1.0]);
        assert!(e.vectors.max_abs_diff(&DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()) < 1e-15);
    }

    #[test]
    fn random_symmetric_reconstructs() {
        let a = random(20, 20, 3);
        let m = a.matmul(&a.transpose()).unwrap().sub(&DenseMatrix::identity(20).scale(3.0)).unwrap();
        let e = sym_eig(&m).unwrap();
        let rel = reconstruct(&e).sub(&m).unwrap().frobenius_norm() / m.frobenius_norm();
        assert!(rel <= 1e-10, "{rel}");
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let vtv = e.vectors.t_matmul(&e.vectors).unwrap();
        assert!(vtv.max_abs_diff(&DenseMatrix::identity(20)) < 1e-12);
        let mv = m.matmul(&e.vectors).unwrap();
        for j in 0..20 {
            for i in 0..20 {
                assert!((mv[(i, j)] - e.values[j] * e.vectors[(i, j)]).abs() <= 1e-8 * e.values[0].abs());
            }
        }
        for j in 0..20 {
            let col = e.vectors.column(j);
            let big = col.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn rejects_non_square_and_nan() {
        assert!(sym_eig(&DenseMatrix::<f64>::zeros(2, 3)).is_err());
        let mut m = DenseMatrix::<f64>::identity(2);
        m.as_mut_slice()[1] = f64::NAN;
        assert!(matches!(sym_eig(&m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn inv_sqrt_cases() {
        let r = inv_sqrt_psd(&DenseMatrix::from_diag(&[4.0, 9.0]), None).unwrap();
        assert!(r.max_abs_diff(&DenseMatrix::from_diag(&[0.5, 1.0 / 3.0])) < 1e-15);
        let r = inv_sqrt_psd(&DenseMatrix::<f64>::identity(4), None).unwrap();
        assert!(r.max_abs_diff(&DenseMatrix::identity(4)) < 1e-15);

        let a = random(10, 10, 11);
        let sigma = a
            .matmul(&a.transpose())
            .unwrap()
            .sub(&DenseMatrix::identity(10).scale(-0.1))
            .unwrap();
        let w = inv_sqrt_psd(&sigma, None).unwrap();
        let id = w.matmul(&sigma).unwrap().matmul(&w).unwrap();
        assert!(id.max_abs_diff(&DenseMatrix::identity(10)) < 1e-8);
        assert!(w.max_abs_diff(&w.transpose()) < 1e-14);
    }

    #[test]
    fn inv_sqrt_rejects_indefinite() {
        let m = DenseMatrix::from_diag(&[1.0, -0.5]);
        assert!(matches!(inv_sqrt_psd(&m, None), Err(Error::NotPsd { .. })));
        assert!(inv_sqrt_psd(&DenseMatrix::<f64>::zeros(2, 2), None).is_err());
    }

    #[test]
    fn inv_sqrt_floors_singular() {
        let m: DenseMatrix<f64> = DenseMatrix::from_diag(&[1.0, 0.0]);
        let w = inv_sqrt_psd(&m, None).unwrap();
        assert!((w[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((w[(1, 1)] - 1e5).abs() < 1e-6);
    }

    #[test]
    fn works_in_f32() {
        let e = sym_eig(&DenseMatrix::<f32>::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
    }
}
