//! Partially linear CCA: a linear map for the first view and, for the second,
//! the whitened conditional mean `x̂(y) = E[X | Y = y]` estimated by
//! Nadaraya–Watson regression.
//!
//! `U, D` are the top eigenpairs of `K = Wh Σx̂x̂ Wh` with `Wh` the inverse
//! square root of the (ridged) covariance of X. The projections are
//! `f(x) = Uᵀ Wh (x − μx)` and `g(y) = D^{-1/2} Uᵀ Wh (x̂(y) − μx̂)`.

use std::time::Instant;

use rayon::prelude::*;

use crate::affinity::AffinityConfig;
use crate::cca::{check_pair, check_ridge, cross_moment, whiten};
use crate::linalg::{apply_optional, maybe_pca, sym_eig, DenseMatrix, PcaDim, PcaMap};
use crate::neighbors::knn_search;
use crate::{Error, FitTimings, Real, Result};

/// Eigenvalues of `K` at or below this are rejected at fit time.
pub const MIN_EIGENVALUE: f64 = 1e-12;

/// How `x̂(y)` is evaluated for new second-view inputs.
#[derive(Clone, Debug, PartialEq)]
pub enum Predictor<T> {
    NadarayaWatson {
        train_y: DenseMatrix<T>,
        train_x: DenseMatrix<T>,
        /// Bandwidth resolved at fit time.
        y_affinity: AffinityConfig<T>,
    },
    /// `x̂ = (y − mean_y) · coef`
    Linear { mean_y: Vec<T>, coef: DenseMatrix<T> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlccaConfig<T> {
    pub dim: usize,
    pub y_affinity: AffinityConfig<T>,
    /// `None` picks `1e-6 · trace(Σxx)/Dx`.
    pub ridge: Option<T>,
    /// Drop each training point's own weight when estimating `x̂` at it.
    pub leave_one_out: bool,
    pub pca_x: Option<PcaDim>,
    pub pca_y: Option<PcaDim>,
}

impl<T: Real> PlccaConfig<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            y_affinity: AffinityConfig::default(),
            ridge: None,
            leave_one_out: false,
            pca_x: None,
            pca_y: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlccaModel<T> {
    pub mean_x: Vec<T>,
    /// `(Σxx + rI)^{-1/2}`
    pub whitener: DenseMatrix<T>,
    /// `Dx × L`, orthonormal columns.
    pub u: DenseMatrix<T>,
    /// Eigenvalues of `K`, non-increasing.
    pub d: Vec<T>,
    pub xhat_mean: Vec<T>,
    pub ridge: T,
    pub predictor: Predictor<T>,
    pub pca_x: Option<PcaMap<T>>,
    pub pca_y: Option<PcaMap<T>>,
}

impl<T: Real> PlccaModel<T> {
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Raw input widths of the two views.
    pub fn input_dims(&self) -> (usize, usize) {
        let dx = self.pca_x.as_ref().map_or(self.whitener.rows(), PcaMap::input_dim);
        let dy = match (&self.pca_y, &self.predictor) {
            (Some(p), _) => p.input_dim(),
            (None, Predictor::NadarayaWatson { train_y, .. }) => train_y.cols(),
            (None, Predictor::Linear { mean_y, .. }) => mean_y.len(),
        };
        (dx, dy)
    }
}

/// Kernel-weighted average of `train_x` rows over the `k` nearest training
/// `y`s of each query.
///
/// Weights are `exp(−(d − d_min)/2σ²)` for squared distances `d`, so the
/// nearest neighbor always has weight one. Each output component is clamped
/// to the range of the neighbors' values, which keeps the result inside
/// their hull despite rounding.
pub fn nw_regress<T: Real>(
    train_y: &DenseMatrix<T>,
    train_x: &DenseMatrix<T>,
    config: &AffinityConfig<T>,
    query_y: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    nw_core(train_y, train_x, config, query_y, false)
}

fn nw_core<T: Real>(
    train_y: &DenseMatrix<T>,
    train_x: &DenseMatrix<T>,
    config: &AffinityConfig<T>,
    query_y: &DenseMatrix<T>,
    leave_one_out: bool,
) -> Result<DenseMatrix<T>> {
    let n = train_y.rows();
    if train_x.rows() != n {
        return Err(Error::dims(format!(
            "{n} training inputs but {} training targets",
            train_x.rows()
        )));
    }
    if query_y.cols() != train_y.cols() {
        return Err(Error::dims(format!(
            "queries have {} columns, training inputs {}",
            query_y.cols(),
            train_y.cols()
        )));
    }
    let dx = train_x.cols();
    if query_y.rows() == 0 {
        return Ok(DenseMatrix::zeros(0, dx));
    }
    let sigma = config.sigma(train_y)?;
    let available = if leave_one_out { n.saturating_sub(1) } else { n };
    let k = config.k.min(available);
    if k == 0 {
        return Err(Error::arg("no training points to regress on"));
    }
    let knn = knn_search(train_y, query_y, k, !leave_one_out)?;
    let two_sigma_sq = T::lit(2.0) * sigma * sigma;
    let rows: Vec<Vec<T>> = (0..query_y.rows())
        .into_par_iter()
        .map(|q| {
            let idx = knn.neighbors(q);
            let dist = knn.distances(q);
            let d0 = dist[0];
            let w: Vec<T> = dist.iter().map(|&d| (-(d - d0) / two_sigma_sq).exp()).collect();
            let total: T = w.iter().copied().sum();
            let mut out = vec![T::zero(); dx];
            let mut lo = vec![T::infinity(); dx];
            let mut hi = vec![T::neg_infinity(); dx];
            for (&i, &wi) in idx.iter().zip(&w) {
                let xi = train_x.row(i);
                for c in 0..dx {
                    out[c] += wi * xi[c];
                    lo[c] = lo[c].min(xi[c]);
                    hi[c] = hi[c].max(xi[c]);
                }
            }
            for c in 0..dx {
                out[c] = (out[c] / total).max(lo[c]).min(hi[c]);
            }
            out
        })
        .collect();
    DenseMatrix::from_rows(&rows)
}

/// Eigen-step shared by the nonparametric fit and the linear oracle.
fn finish<T: Real>(
    dim: usize,
    mean_x: Vec<T>,
    whitener: DenseMatrix<T>,
    ridge: T,
    sxhat: &DenseMatrix<T>,
    xhat_mean: Vec<T>,
    predictor: Predictor<T>,
    pca_x: Option<PcaMap<T>>,
    pca_y: Option<PcaMap<T>>,
) -> Result<PlccaModel<T>> {
    let k = whitener.matmul(sxhat)?.matmul(&whitener)?;
    let eig = sym_eig(&k)?;
    let d = eig.values[..dim].to_vec();
    if let Some(bad) = d.iter().position(|&v| !(v > T::lit(MIN_EIGENVALUE))) {
        return Err(Error::Singular(format!(
            "eigenvalue {} of K is {}; the second view carries no signal in that direction",
            bad + 1,
            d[bad]
        )));
    }
    Ok(PlccaModel {
        mean_x,
        whitener,
        u: eig.vectors.select_columns(0..dim),
        d,
        xhat_mean,
        ridge,
        predictor,
        pca_x,
        pca_y,
    })
}

pub fn plcca_fit<T: Real>(x: &DenseMatrix<T>, y: &DenseMatrix<T>, config: &PlccaConfig<T>) -> Result<PlccaModel<T>> {
    plcca_fit_timed(x, y, config).map(|(m, _)| m)
}

/// As [`plcca_fit`], also reporting the time spent in the regression's
/// neighbor search versus the rest.
pub fn plcca_fit_timed<T: Real>(
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    config: &PlccaConfig<T>,
) -> Result<(PlccaModel<T>, FitTimings)> {
    if x.rows() != y.rows() {
        return Err(Error::dims(format!("views have {} and {} rows", x.rows(), y.rows())));
    }
    check_ridge(config.ridge)?;
    let start = Instant::now();
    let (pca_x, xr) = maybe_pca(x, config.pca_x)?;
    let (pca_y, yr) = maybe_pca(y, config.pca_y)?;
    if x.rows() < 2 {
        return Err(Error::arg("at least two samples are required"));
    }
    if config.dim == 0 || config.dim > xr.cols() {
        return Err(Error::arg(format!(
            "dimension {} outside 1..={}",
            config.dim,
            xr.cols()
        )));
    }
    let y_affinity = config.y_affinity.resolve(&yr)?;
    let wx = whiten(&xr, config.ridge)?;
    let setup = start.elapsed().as_secs_f64();

    let search = Instant::now();
    let xhat = nw_core(&yr, &xr, &y_affinity, &yr, config.leave_one_out)?;
    let neighbor_search_secs = search.elapsed().as_secs_f64();

    let opt = Instant::now();
    let xhat_mean = xhat.column_means();
    let sxhat = xhat.sub_row_vector(&xhat_mean)?.gram();
    let predictor = Predictor::NadarayaWatson {
        train_y: yr,
        train_x: xr,
        y_affinity,
    };
    let model = finish(
        config.dim,
        wx.mean,
        wx.whitener,
        wx.ridge,
        &sxhat,
        xhat_mean,
        predictor,
        pca_x,
        pca_y,
    )?;
    let timings = FitTimings {
        neighbor_search_secs,
        optimization_secs: setup + opt.elapsed().as_secs_f64(),
    };
    Ok((model, timings))
}

/// The same pipeline with the least-squares predictor `x̂ = Σxy Σyy⁻¹ y` in
/// place of the regression. Its second moment is taken in the ridged metric of
/// Y, so the result coincides with linear CCA for any ridge.
pub fn plcca_linear_oracle<T: Real>(
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    dim: usize,
    ridge: Option<T>,
) -> Result<PlccaModel<T>> {
    check_pair(x, y, dim)?;
    check_ridge(ridge)?;
    let wx = whiten(x, ridge)?;
    let wy = whiten(y, ridge)?;
    let sxy = cross_moment(&wx.centered, &wy.centered)?;
    let coef = wy.whitener.matmul(&wy.whitener)?.matmul(&sxy.transpose())?;
    let sxhat = sxy.matmul(&coef)?;
    let predictor = Predictor::Linear { mean_y: wy.mean, coef };
    let dx = x.cols();
    finish(
        dim,
        wx.mean,
        wx.whitener,
        wx.ridge,
        &sxhat,
        vec![T::zero(); dx],
        predictor,
        None,
        None,
    )
}

/// `Uᵀ Wh (x − μx)` for each row.
pub fn plcca_project_x<T: Real>(model: &PlccaModel<T>, x_new: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let (dx, _) = model.input_dims();
    if x_new.cols() != dx {
        return Err(Error::dims(format!("first view expects {dx} columns, got {}", x_new.cols())));
    }
    let xr = apply_optional(model.pca_x.as_ref(), x_new)?;
    xr.sub_row_vector(&model.mean_x)?
        .matmul(&model.whitener)?
        .matmul(&model.u)
}

/// `D^{-1/2} Uᵀ Wh (x̂(y) − μx̂)` for each row.
pub fn plcca_project_y<T: Real>(model: &PlccaModel<T>, y_new: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let (_, dy) = model.input_dims();
    if y_new.cols() != dy {
        return Err(Error::dims(format!("second view expects {dy} columns, got {}", y_new.cols())));
    }
    let yr = apply_optional(model.pca_y.as_ref(), y_new)?;
    let xhat = match &model.predictor {
        Predictor::NadarayaWatson {
            train_y,
            train_x,
            y_affinity,
        } => nw_regress(train_y, train_x, y_affinity, &yr)?,
        Predictor::Linear { mean_y, coef } => yr.sub_row_vector(mean_y)?.matmul(coef)?,
    };
    let inv_root: Vec<T> = model.d.iter().map(|&v| T::one() / v.sqrt()).collect();
    Ok(xhat
        .sub_row_vector(&model.xhat_mean)?
        .matmul(&model.whitener)?
        .matmul(&model.u)?
        .scale_columns(&inv_root))
}

/// The second-view projection that is optimal for fixed first-view
/// functions: `Fhat · M^{-1/2}` with `M = (1/N) Fhatᵀ Fhat`, where row `n` of
/// `fhat` holds `E[f(X) | Y = yₙ]`.
///
/// Fails when the smallest eigenvalue of `M` does not exceed `eigen_floor`
/// (default `1e-10 · λmax`).
pub fn optimal_g<T: Real>(fhat: &DenseMatrix<T>, eigen_floor: Option<T>) -> Result<DenseMatrix<T>> {
    if fhat.rows() == 0 || fhat.cols() == 0 {
        return Err(Error::arg("empty input"));
    }
    fhat.check_finite()?;
    let m = fhat.gram();
    let eig = sym_eig(&m)?;
    let max = eig.values[0];
    let min = *eig.values.last().expect("nonempty");
    let floor = eigen_floor.unwrap_or(T::lit(crate::linalg::DEFAULT_RELATIVE_FLOOR) * max);
    if !(max > T::zero()) || !(min > floor) {
        return Err(Error::Singular(format!(
            "second moment has eigenvalue {min} at or below the floor {floor}"
        )));
    }
    let w = crate::linalg::spectral_function(&eig, |l| T::one() / l.sqrt());
    fhat.matmul(&w)
}
