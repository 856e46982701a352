use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::DenseMatrix;
use crate::{Error, Real, Result};

/// Two aligned views and the latent variable that generated them.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedDataset<T> {
    pub x: DenseMatrix<T>,
    pub y: DenseMatrix<T>,
    pub labels: DenseMatrix<T>,
}

impl<T: Real> PairedDataset<T> {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    /// Rows `range` of all three tables.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        let idx: Vec<usize> = range.collect();
        Self {
            x: self.x.select_rows(&idx),
            y: self.y.select_rows(&idx),
            labels: self.labels.select_rows(&idx),
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn to_matrix<T: Real>(rows: usize, cols: usize, data: Vec<f64>) -> DenseMatrix<T> {
    DenseMatrix::new(rows, cols, data.into_iter().map(T::lit).collect()).expect("finite samples")
}

/// Standard Gaussian views with `corr(Xᵢ, Yᵢ) = ρᵢ` and no other cross
/// correlation: `Xᵢ = √ρᵢ Z + √(1−ρᵢ) E₁`, `Yᵢ = √ρᵢ Z + √(1−ρᵢ) E₂`.
/// The labels are the shared `Z`.
pub fn gen_gaussian_pair<T: Real>(n: usize, correlations: &[f64], seed: u64) -> Result<PairedDataset<T>> {
    if correlations.is_empty() {
        return Err(Error::arg("at least one correlation is required"));
    }
    if let Some(r) = correlations.iter().find(|r| !(0.0..1.0).contains(*r)) {
        return Err(Error::arg(format!("correlation {r} outside [0, 1)")));
    }
    let l = correlations.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y, mut z) = (Vec::with_capacity(n * l), Vec::with_capacity(n * l), Vec::with_capacity(n * l));
    for _ in 0..n {
        for &rho in correlations {
            let shared = normal(&mut rng);
            let e1 = normal(&mut rng);
            let e2 = normal(&mut rng);
            let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
            x.push(a * shared + b * e1);
            y.push(a * shared + b * e2);
            z.push(shared);
        }
    }
    Ok(PairedDataset {
        x: to_matrix(n, l, x),
        y: to_matrix(n, l, y),
        labels: to_matrix(n, l, z),
    })
}

/// Shared `t ~ U[0, 1)`. The first view is the planar spiral
/// `(t cos(2π·turns·t), t sin(2π·turns·t))`, the second is `(t, z)` with an
/// independent standard Gaussian nuisance `z`; both views get isotropic
/// Gaussian noise of standard deviation `noise`. The labels are `t`.
pub fn gen_spiral_pair<T: Real>(n: usize, noise: f64, turns: f64, seed: u64) -> Result<PairedDataset<T>> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::arg(format!("noise must be nonnegative, got {noise}")));
    }
    if !(turns > 0.0 && turns.is_finite()) {
        return Err(Error::arg(format!("turns must be positive, got {turns}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y, mut labels) = (Vec::with_capacity(2 * n), Vec::with_capacity(2 * n), Vec::with_capacity(n));
    for _ in 0..n {
        let t: f64 = rng.gen();
        let z = normal(&mut rng);
        let angle = 2.0 * PI * turns * t;
        let e: [f64; 4] = std::array::from_fn(|_| normal(&mut rng));
        x.push(t * angle.cos() + noise * e[0]);
        x.push(t * angle.sin() + noise * e[1]);
        y.push(t + noise * e[2]);
        y.push(z + noise * e[3]);
        labels.push(t);
    }
    Ok(PairedDataset {
        x: to_matrix(n, 2, x),
        y: to_matrix(n, 2, y),
        labels: to_matrix(n, 1, labels),
    })
}

/// Standard Gaussian `X` with `Y = X`; the labels are `X` as well.
pub fn gen_identical_views<T: Real>(n: usize, d: usize, seed: u64) -> Result<PairedDataset<T>> {
    if d == 0 {
        return Err(Error::arg("dimension must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * d).map(|_| normal(&mut rng)).collect();
    let x: DenseMatrix<T> = to_matrix(n, d, data);
    Ok(PairedDataset {
        y: x.clone(),
        labels: x.clone(),
        x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_spiral_lies_on_the_curve() {
        let d = gen_spiral_pair::<f64>(200, 0.0, 1.5, 3).unwrap();
        for i in 0..200 {
            let t = d.labels[(i, 0)];
            let a = 2.0 * PI * 1.5 * t;
            assert_eq!(d.x[(i, 0)], t * a.cos());
            assert_eq!(d.x[(i, 1)], t * a.sin());
            assert_eq!(d.y[(i, 0)], t);
        }
    }

    #[test]
    fn generators_are_seeded() {
        assert_eq!(gen_spiral_pair::<f64>(50, 0.1, 1.5, 1).unwrap(), gen_spiral_pair(50, 0.1, 1.5, 1).unwrap());
        assert_ne!(gen_spiral_pair::<f64>(50, 0.1, 1.5, 1).unwrap(), gen_spiral_pair(50, 0.1, 1.5, 2).unwrap());
        assert_eq!(gen_gaussian_pair::<f64>(50, &[0.5], 1).unwrap(), gen_gaussian_pair(50, &[0.5], 1).unwrap());
        assert_eq!(gen_identical_views::<f64>(10, 3, 1).unwrap(), gen_identical_views(10, 3, 1).unwrap());
    }

    #[test]
    fn invalid_parameters() {
        assert!(gen_gaussian_pair::<f64>(10, &[1.0], 0).is_err());
        assert!(gen_gaussian_pair::<f64>(10, &[-0.1], 0).is_err());
        assert!(gen_gaussian_pair::<f64>(10, &[], 0).is_err());
        assert!(gen_spiral_pair::<f64>(10, -1.0, 1.5, 0).is_err());
        assert!(gen_spiral_pair::<f64>(10, 0.1, 0.0, 0).is_err());
    }
}
