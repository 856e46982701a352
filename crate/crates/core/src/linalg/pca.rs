use super::{sym_eig, DenseMatrix};
use crate::{Error, Real, Result};

/// Affine map onto the leading principal subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaMap<T> {
    pub mean: Vec<T>,
    /// `D × d`, orthonormal columns ordered by decreasing variance.
    pub basis: DenseMatrix<T>,
    /// Variance captured by each retained direction.
    pub variances: Vec<T>,
    /// Total variance of the training data.
    pub total_variance: T,
}

impl<T: Real> PcaMap<T> {
    pub fn input_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn retained_variance_fraction(&self) -> T {
        if self.total_variance <= T::zero() {
            return T::one();
        }
        self.variances.iter().copied().sum::<T>() / self.total_variance
    }

    pub fn apply(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        pca_apply(&self.mean, &self.basis, x)
    }

    /// Maps projected coordinates back to the input space.
    pub fn reconstruct(&self, z: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let mut back = z.matmul(&self.basis.transpose())?;
        for i in 0..back.rows() {
            for (v, &m) in back.row_mut(i).iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        Ok(back)
    }
}

/// Fits a `d`-component PCA to the rows of `x`.
pub fn pca_fit<T: Real>(x: &DenseMatrix<T>, d: usize) -> Result<PcaMap<T>> {
    let (n, dim) = x.shape();
    if d == 0 || d > n.min(dim) {
        return Err(Error::arg(format!(
            "PCA dimension {d} outside 1..={}",
            n.min(dim)
        )));
    }
    let mean = x.column_means();
    let cov = x.sub_row_vector(&mean)?.gram();
    let eig = sym_eig(&cov)?;
    let total_variance = cov.trace();
    Ok(PcaMap {
        mean,
        basis: eig.vectors.select_columns(0..d),
        variances: eig.values[..d].iter().map(|&v| v.max(T::zero())).collect(),
        total_variance,
    })
}

/// `(x − mean) · basis`
pub fn pca_apply<T: Real>(mean: &[T], basis: &DenseMatrix<T>, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if mean.len() != basis.rows() || x.cols() != mean.len() {
        return Err(Error::dims(format!(
            "PCA map expects {} input columns, got {}",
            basis.rows(),
            x.cols()
        )));
    }
    x.sub_row_vector(mean)?.matmul(basis)
}

/// Requested PCA output size: an explicit count or a fraction of the input
/// dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PcaDim {
    Components(usize),
    Fraction(f64),
}

impl PcaDim {
    /// Default fraction of the input dimension kept when PCA is enabled.
    pub const DEFAULT_FRACTION: f64 = 0.2;

    /// Number of components for `input_dim` columns and `n` samples; a
    /// fraction keeps `max(1, round(fraction · input_dim))`, capped at `n`.
    pub fn resolve(self, input_dim: usize, n: usize) -> Result<usize> {
        let cap = input_dim.min(n);
        let d = match self {
            PcaDim::Components(c) => c,
            PcaDim::Fraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::arg(format!("PCA fraction must lie in (0, 1], got {f}")));
                }
                ((f * input_dim as f64).round() as usize).max(1).min(cap)
            }
        };
        if d == 0 || d > cap {
            return Err(Error::arg(format!("PCA dimension {d} outside 1..={cap}")));
        }
        Ok(d)
    }
}

/// Fits and applies PCA when requested; otherwise passes `x` through.
pub fn maybe_pca<T: Real>(x: &DenseMatrix<T>, dim: Option<PcaDim>) -> Result<(Option<PcaMap<T>>, DenseMatrix<T>)> {
    match dim {
        None => Ok((None, x.clone())),
        Some(d) => {
            let map = pca_fit(x, d.resolve(x.cols(), x.rows())?)?;
            let z = map.apply(x)?;
            Ok((Some(map), z))
        }
    }
}

/// Applies an optional PCA map.
pub fn apply_optional<T: Real>(map: Option<&PcaMap<T>>, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    match map {
        None => Ok(x.clone()),
        Some(m) => m.apply(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn mse(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
        let d = a.sub(b).unwrap();
        d.as_slice().iter().map(|v| v * v).sum::<f64>() / a.rows() as f64
    }

    #[test]
    fn line_in_plane() {
        let x = DenseMatrix::from_fn(20, 2, |i, j| (i as f64 - 3.0) * if j == 0 { 1.0 } else { 2.0 } + 1.0);
        let p = pca_fit(&x, 1).unwrap();
        let back = p.reconstruct(&p.apply(&x).unwrap()).unwrap();
        assert!(mse(&x, &back) <= 1e-10);
        let b = p.basis.column(0);
        assert!((b[1] / b[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn full_rank_is_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: DenseMatrix<f64> = DenseMatrix::from_fn(50, 4, |_, _| StandardNormal.sample(&mut rng));
        let p = pca_fit(&x, 4).unwrap();
        let back = p.reconstruct(&p.apply(&x).unwrap()).unwrap();
        assert!(x.max_abs_diff(&back) <= 1e-10);
        let g = p.basis.t_matmul(&p.basis).unwrap();
        assert!(g.max_abs_diff(&DenseMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn anisotropic_retained_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sd = [3.0, 1.0, 0.1];
        let x = DenseMatrix::from_fn(10_000, 3, |_, j| sd[j] * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
        let p = pca_fit(&x, 1).unwrap();
        // population ratio 9 / 10.01
        assert!(p.retained_variance_fraction() >= 0.88);
    }

    #[test]
    fn apply_edge_cases() {
        let x: DenseMatrix<f64> = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 5.0], vec![0.0, 1.0]]).unwrap();
        let p = pca_fit(&x, 2).unwrap();
        let means = DenseMatrix::from_fn(3, 2, |_, j| p.mean[j]);
        assert!(p.apply(&means).unwrap().as_slice().iter().all(|v| v.abs() < 1e-15));
        let id = pca_apply(&[0.0, 0.0], &DenseMatrix::identity(2), &x).unwrap();
        assert_eq!(id, x);
        assert!(pca_apply(&[0.0], &DenseMatrix::identity(1), &x).is_err());
        assert!(pca_fit(&x, 3).is_err());
        assert!(pca_fit(&x, 0).is_err());
    }

    #[test]
    fn dimension_requests() {
        assert_eq!(PcaDim::Fraction(0.2).resolve(10, 100).unwrap(), 2);
        assert_eq!(PcaDim::Fraction(0.01).resolve(10, 100).unwrap(), 1);
        assert_eq!(PcaDim::Fraction(1.0).resolve(10, 4).unwrap(), 4);
        assert_eq!(PcaDim::Components(3).resolve(10, 100).unwrap(), 3);
        assert!(PcaDim::Components(11).resolve(10, 100).is_err());
        assert!(PcaDim::Fraction(0.0).resolve(10, 100).is_err());
    }
}
