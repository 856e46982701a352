//! Evaluation: total canonical correlation between paired projections, and
//! plain Pearson correlation.

use crate::cca::{cca_fit, check_ridge};
use crate::linalg::DenseMatrix;
use crate::{Error, Real, Result};

/// Relative ridge used when none is given: `1e-10 · trace(Σ)/D` per block.
pub const DEFAULT_METRIC_RIDGE_SCALE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport<T> {
    /// Sum of the canonical correlations.
    pub total_correlation: T,
    pub per_component: Vec<T>,
    pub dim: usize,
    pub n_test: usize,
}

/// Fits a linear CCA with `l_eval` components between the two projection
/// blocks and sums its canonical correlations.
pub fn total_correlation<T: Real>(
    p1: &DenseMatrix<T>,
    p2: &DenseMatrix<T>,
    l_eval: usize,
    ridge: Option<T>,
) -> Result<EvalReport<T>> {
    if p1.rows() != p2.rows() {
        return Err(Error::dims(format!(
            "projection blocks have {} and {} rows",
            p1.rows(),
            p2.rows()
        )));
    }
    check_ridge(ridge)?;
    let ridge = match ridge {
        Some(r) => r,
        None => {
            let scale = |p: &DenseMatrix<T>| {
                let mean = p.column_means();
                let var: T = p
                    .row_iter()
                    .flat_map(|r| r.iter().zip(&mean).map(|(&v, &m)| (v - m) * (v - m)))
                    .sum();
                var / T::from_count(p.rows().max(1) * p.cols().max(1))
            };
            T::lit(DEFAULT_METRIC_RIDGE_SCALE) * scale(p1).max(scale(p2))
        }
    };
    let model = cca_fit(p1, p2, l_eval, Some(ridge))?;
    Ok(EvalReport {
        total_correlation: model.correlations.iter().copied().sum(),
        per_component: model.correlations,
        dim: l_eval,
        n_test: p1.rows(),
    })
}

/// Sample Pearson correlation.
pub fn pearson<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::dims(format!("lengths {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::arg("at least two samples are required"));
    }
    let n = T::from_count(a.len());
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > T::zero()) || !(sbb > T::zero()) {
        return Err(Error::Singular("zero variance".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).max(-T::one()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_affine() {
        let a = [1.0, 2.0, 4.0, 7.0];
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((pearson(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        let c: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((pearson(&a, &c).unwrap() + 1.0).abs() < 1e-15);
        assert!(pearson(&a, &[1.0; 4]).is_err());
        assert!(pearson(&a[..1], &b[..1]).is_err());
    }

    #[test]
    fn identical_blocks() {
        let p = DenseMatrix::from_fn(50, 3, |i, j| ((i * (j + 2)) as f64).sin());
        let r = total_correlation(&p, &p, 3, None).unwrap();
        assert!((r.total_correlation - 3.0).abs() < 1e-6);
        assert!(total_correlation(&p, &p.select_rows(&[0, 1]), 1, None).is_err());
    }
}
