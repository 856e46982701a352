//! Linear canonical correlation analysis.
//!
//! With whiteners `Wx = (Σxx + rI)^{-1/2}` and `Wy = (Σyy + rI)^{-1/2}`, the
//! top singular triplets of `T = Wx Σxy Wy` give the projections
//! `W1 = Wx U`, `W2 = Wy V` and the canonical correlations.

use crate::linalg::{dense_svd, inv_sqrt_from_eigen, sym_eig, DenseMatrix};
use crate::{Error, Real, Result};

/// Relative size of the default ridge: `1e-6 · trace(Σ) / D`.
pub const DEFAULT_RIDGE_SCALE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct CcaModel<T> {
    pub mean_x: Vec<T>,
    pub mean_y: Vec<T>,
    /// `Dx × L`
    pub w1: DenseMatrix<T>,
    /// `Dy × L`
    pub w2: DenseMatrix<T>,
    /// Non-increasing.
    pub correlations: Vec<T>,
    pub ridge_x: T,
    pub ridge_y: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum View {
    First,
    Second,
}

impl<T: Real> CcaModel<T> {
    pub fn dim(&self) -> usize {
        self.correlations.len()
    }

    pub fn input_dim(&self, view: View) -> usize {
        match view {
            View::First => self.w1.rows(),
            View::Second => self.w2.rows(),
        }
    }
}

/// `(1/N) aᵀ b`
pub(crate) fn cross_moment<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = T::from_count(a.rows().max(1));
    Ok(a.t_matmul(b)?.scale(T::one() / n))
}

/// Adds `ridge` to the diagonal.
pub(crate) fn add_ridge<T: Real>(m: &DenseMatrix<T>, ridge: T) -> DenseMatrix<T> {
    let mut out = m.clone();
    for i in 0..out.rows() {
        out[(i, i)] += ridge;
    }
    out
}

pub(crate) fn default_ridge<T: Real>(cov: &DenseMatrix<T>) -> T {
    T::lit(DEFAULT_RIDGE_SCALE) * cov.trace() / T::from_count(cov.rows().max(1))
}

pub(crate) fn check_ridge<T: Real>(ridge: Option<T>) -> Result<()> {
    match ridge {
        Some(r) if !(r >= T::zero() && r.is_finite()) => {
            Err(Error::arg(format!("ridge must be nonnegative, got {r}")))
        }
        _ => Ok(()),
    }
}

/// Centered, ridged covariance of one view and its inverse square root.
pub(crate) struct Whitened<T> {
    pub mean: Vec<T>,
    pub centered: DenseMatrix<T>,
    pub ridge: T,
    pub whitener: DenseMatrix<T>,
}

pub(crate) fn whiten<T: Real>(x: &DenseMatrix<T>, ridge: Option<T>) -> Result<Whitened<T>> {
    let mean = x.column_means();
    let centered = x.sub_row_vector(&mean)?;
    let cov = centered.gram();
    let ridge = ridge.unwrap_or_else(|| default_ridge(&cov));
    let eig = sym_eig(&add_ridge(&cov, ridge))?;
    let whitener = inv_sqrt_from_eigen(&eig, None)?;
    Ok(Whitened {
        mean,
        centered,
        ridge,
        whitener,
    })
}

pub(crate) fn check_pair<T: Real>(x: &DenseMatrix<T>, y: &DenseMatrix<T>, dim: usize) -> Result<()> {
    if x.rows() != y.rows() {
        return Err(Error::dims(format!(
            "views have {} and {} rows",
            x.rows(),
            y.rows()
        )));
    }
    if x.rows() < 2 {
        return Err(Error::arg("at least two samples are required"));
    }
    let cap = x.cols().min(y.cols());
    if dim == 0 || dim > cap {
        return Err(Error::arg(format!("dimension {dim} outside 1..={cap}")));
    }
    Ok(())
}

/// Fits `dim` canonical pairs. `ridge = None` uses `1e-6 · trace(Σ)/D` per view.
pub fn cca_fit<T: Real>(
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    dim: usize,
    ridge: Option<T>,
) -> Result<CcaModel<T>> {
    check_pair(x, y, dim)?;
    check_ridge(ridge)?;
    let wx = whiten(x, ridge)?;
    let wy = whiten(y, ridge)?;
    let sxy = cross_moment(&wx.centered, &wy.centered)?;
    let t = wx.whitener.matmul(&sxy)?.matmul(&wy.whitener)?;
    let svd = dense_svd(&t)?.truncate(dim);
    Ok(CcaModel {
        w1: wx.whitener.matmul(&svd.u)?,
        w2: wy.whitener.matmul(&svd.v)?,
        correlations: svd.singular_values,
        mean_x: wx.mean,
        mean_y: wy.mean,
        ridge_x: wx.ridge,
        ridge_y: wy.ridge,
    })
}

/// `(data − mean) · W` for the chosen view.
pub fn cca_project<T: Real>(model: &CcaModel<T>, view: View, data: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let (mean, w) = match view {
        View::First => (&model.mean_x, &model.w1),
        View::Second => (&model.mean_y, &model.w2),
    };
    if data.cols() != w.rows() {
        return Err(Error::dims(format!(
            "view expects {} columns, got {}",
            w.rows(),
            data.cols()
        )));
    }
    data.sub_row_vector(mean)?.matmul(w)
}

/// Fits the same model through the least-squares predictor
/// `x̂ = Σxy Σyy⁻¹ y`: `U, D` are the top eigenpairs of
/// `K = Wx Σx̂x̂ Wx`, and the second view maps through `D^{-1/2} Uᵀ Wx x̂`.
pub fn cca_predictor_form<T: Real>(
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    dim: usize,
    ridge: Option<T>,
) -> Result<CcaModel<T>> {
    check_pair(x, y, dim)?;
    check_ridge(ridge)?;
    let wx = whiten(x, ridge)?;
    let wy = whiten(y, ridge)?;
    // x̂ = B y with B = Σxy Σyy⁻¹, written for row samples as X̂ = Y Bᵀ
    let syy_inv = wy.whitener.matmul(&wy.whitener)?;
    let sxy = cross_moment(&wx.centered, &wy.centered)?;
    let bt = syy_inv.matmul(&sxy.transpose())?;
    // Σx̂x̂ = B (Σyy + rI) Bᵀ = Σxy Bᵀ, the predictor's second moment in the
    // ridged metric; without a ridge this is the plain sample moment of x̂
    let sxhat = sxy.matmul(&bt)?;
    let k = wx.whitener.matmul(&sxhat)?.matmul(&wx.whitener)?;
    let eig = sym_eig(&k)?;
    let d: Vec<T> = eig.values[..dim].to_vec();
    if let Some(bad) = d.iter().position(|&v| v < T::lit(1e-12)) {
        return Err(Error::Singular(format!(
            "eigenvalue {} of the predictor kernel is {} (degenerate canonical direction)",
            bad + 1,
            d[bad]
        )));
    }
    let u = eig.vectors.select_columns(0..dim);
    let inv_root: Vec<T> = d.iter().map(|&v| T::one() / v.sqrt()).collect();
    let w2 = bt.matmul(&wx.whitener)?.matmul(&u)?.scale_columns(&inv_root);
    Ok(CcaModel {
        w1: wx.whitener.matmul(&u)?,
        w2,
        correlations: d.iter().map(|&v| v.sqrt()).collect(),
        mean_x: wx.mean,
        mean_y: wy.mean,
        ridge_x: wx.ridge,
        ridge_y: wy.ridge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, d: usize, seed: u64) -> DenseMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, d, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn identical_views_are_fully_correlated() {
        let x = random(400, 3, 1);
        let m = cca_fit(&x, &x, 3, Some(0.0)).unwrap();
        for c in &m.correlations {
            assert!((c - 1.0).abs() < 1e-6);
        }
        let p1 = cca_project(&m, View::First, &x).unwrap();
        let p2 = cca_project(&m, View::Second, &x).unwrap();
        assert!(p1.max_abs_diff(&p2) < 1e-6);
    }

    #[test]
    fn mean_projects_to_zero() {
        let x = random(100, 3, 2);
        let y = random(100, 2, 3);
        let m = cca_fit(&x, &y, 2, None).unwrap();
        let mean = DenseMatrix::from_rows(&[m.mean_x.clone(), m.mean_x.clone()]).unwrap();
        let p = cca_project(&m, View::First, &mean).unwrap();
        assert!(p.as_slice().iter().all(|v| v.abs() < 1e-12));
        assert!(cca_project(&m, View::Second, &x).is_err());
    }

    #[test]
    fn argument_errors() {
        let x = random(10, 3, 4);
        let y = random(10, 2, 5);
        assert!(cca_fit(&x, &y, 3, None).is_err());
        assert!(cca_fit(&x, &y, 0, None).is_err());
        assert!(cca_fit(&x, &random(9, 2, 6), 1, None).is_err());
        assert!(cca_fit(&random(1, 3, 7), &random(1, 2, 8), 1, None).is_err());
        assert!(cca_fit(&x, &y, 1, Some(-1.0)).is_err());
    }

    #[test]
    fn predictor_form_agrees() {
        let x = random(300, 4, 9);
        let mut y = random(300, 3, 10);
        for i in 0..300 {
            y[(i, 0)] += x[(i, 0)] + 0.5 * x[(i, 2)];
            y[(i, 1)] -= 0.7 * x[(i, 1)];
        }
        let a = cca_fit(&x, &y, 3, None).unwrap();
        let b = cca_predictor_form(&x, &y, 3, None).unwrap();
        for (p, q) in a.correlations.iter().zip(&b.correlations) {
            assert!((p - q).abs() < 1e-8);
        }
        assert!(a.w1.max_abs_diff(&b.w1) < 1e-6);
        assert!(a.w2.max_abs_diff(&b.w2) < 1e-6);
    }
}
