//! Nonparametric CCA from kernel density estimates.
//!
//! With `Wx` the right-stochastic affinity matrix of the first view and `Wy`
//! the left-stochastic one of the second, `S = Wx Wy` discretises the density
//! ratio `p(x, y) / (p(x) p(y))` (up to a factor `1/N`). Its leading singular
//! pair is nearly constant with `σ₁ ≈ 1` and is discarded; the next `L` pairs,
//! scaled by `√N`, are the training projections. New points are projected
//! with the Nyström extension
//! `fᵢ(x) = (1/σᵢ) Σₙ s(x, yₙ) gᵢ(yₙ)` and its mirror for the second view.

use std::time::Instant;

use rayon::prelude::*;

use crate::affinity::{
    affinity_from_neighbors, affinity_rows, normalize_left_stochastic, normalize_right_stochastic,
    AffinityConfig, AffinityRow,
};
use crate::linalg::{
    apply_optional, dense_svd, maybe_pca, spgemm, truncated_svd, DenseMatrix, PcaDim, PcaMap,
    SparseMatrix, SvdResult, TruncatedSvdOptions,
};
use crate::neighbors::knn_search;
use crate::{Error, FitTimings, Real, Result};

/// Coefficient of variation of the first left vector above which the fit is
/// flagged as poorly sampled.
pub const MAX_FIRST_VECTOR_CV: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SvdSolver {
    Randomized,
    /// Dense Jacobi SVD of the materialised score matrix; small N only.
    Dense,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NccaConfig<T> {
    pub dim: usize,
    pub x_affinity: AffinityConfig<T>,
    pub y_affinity: AffinityConfig<T>,
    pub pca_x: Option<PcaDim>,
    pub pca_y: Option<PcaDim>,
    pub svd: TruncatedSvdOptions,
    pub solver: SvdSolver,
    /// Allowed `|σ₁ − 1|` before a warning is logged.
    pub sigma1_tolerance: f64,
    /// Keep `Wx` so that second-view inputs can be projected.
    pub bidirectional: bool,
    /// Keep only the largest `m` entries of every row of `S`.
    pub retruncate: Option<usize>,
}

impl<T: Real> NccaConfig<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            x_affinity: AffinityConfig::default(),
            y_affinity: AffinityConfig::default(),
            pca_x: None,
            pca_y: None,
            svd: TruncatedSvdOptions::default(),
            solver: SvdSolver::Randomized,
            sigma1_tolerance: 0.15,
            bidirectional: true,
            retruncate: None,
        }
    }

    /// Same neighbor count and bandwidth rule for both views.
    pub fn with_affinity(mut self, affinity: AffinityConfig<T>) -> Self {
        self.x_affinity = affinity.clone();
        self.y_affinity = affinity;
        self
    }
}

/// `S = Wx · Wy` with its factors.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix<T> {
    pub s: SparseMatrix<T>,
    /// Right-stochastic.
    pub wx: SparseMatrix<T>,
    /// Left-stochastic.
    pub wy: SparseMatrix<T>,
}

/// Builds the normalised affinities of both views and their product.
pub fn build_score_matrix<T: Real>(
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    x_affinity: &AffinityConfig<T>,
    y_affinity: &AffinityConfig<T>,
) -> Result<ScoreMatrix<T>> {
    build_timed(x, y, x_affinity, y_affinity).map(|(s, _)| s)
}

fn build_timed<T: Real>(
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    x_affinity: &AffinityConfig<T>,
    y_affinity: &AffinityConfig<T>,
) -> Result<(ScoreMatrix<T>, f64)> {
    let n = x.rows();
    if y.rows() != n {
        return Err(Error::dims(format!("views have {n} and {} rows", y.rows())));
    }
    let sx = x_affinity.sigma(x)?;
    let sy = y_affinity.sigma(y)?;
    for (name, k) in [("first", x_affinity.k), ("second", y_affinity.k)] {
        if k > n {
            return Err(Error::arg(format!(
                "{name} view: k = {k} exceeds the {n} training points"
            )));
        }
    }
    let search = Instant::now();
    let kx = knn_search(x, x, x_affinity.k, true)?;
    let ky = knn_search(y, y, y_affinity.k, true)?;
    let search_secs = search.elapsed().as_secs_f64();
    let wx = normalize_right_stochastic(&affinity_from_neighbors(n, &kx, sx, x_affinity.mutual)?)?;
    drop(kx);
    let wy = normalize_left_stochastic(&affinity_from_neighbors(n, &ky, sy, y_affinity.mutual)?)?;
    drop(ky);
    let s = spgemm(&wx, &wy)?;
    Ok((ScoreMatrix { s, wx, wy }, search_secs))
}

/// Fit diagnostics for the discarded leading pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NccaDiagnostics {
    /// `|σ₁ − 1|`
    pub sigma1_deviation: f64,
    /// Standard deviation over absolute mean of `√N · U[:, 0]`.
    pub first_vector_cv: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NccaModel<T> {
    /// First-view training inputs after PCA.
    pub train_x: DenseMatrix<T>,
    /// Second-view training inputs after PCA; kept for bidirectional models.
    pub train_y: Option<DenseMatrix<T>>,
    pub pca_x: Option<PcaMap<T>>,
    pub pca_y: Option<PcaMap<T>>,
    /// Bandwidths resolved at fit time.
    pub x_affinity: AffinityConfig<T>,
    pub y_affinity: AffinityConfig<T>,
    /// Left-stochastic second-view affinities.
    pub wy: SparseMatrix<T>,
    /// Right-stochastic first-view affinities; kept for bidirectional models.
    pub wx: Option<SparseMatrix<T>>,
    /// `σ₁ ≥ … ≥ σ_{L+1}`
    pub singular_values: Vec<T>,
    /// `√N · U`, `N × (L+1)`, including the discarded first column.
    pub f: DenseMatrix<T>,
    /// `√N · V`
    pub g: DenseMatrix<T>,
    pub diagnostics: NccaDiagnostics,
    // Nyström caches: Wy·G and Wxᵀ·F
    wy_g: DenseMatrix<T>,
    wxt_f: Option<DenseMatrix<T>>,
}

impl<T: Real> NccaModel<T> {
    /// Assembles a model from its stored parts; the projection caches are
    /// recomputed.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        train_x: DenseMatrix<T>,
        train_y: Option<DenseMatrix<T>>,
        pca_x: Option<PcaMap<T>>,
        pca_y: Option<PcaMap<T>>,
        x_affinity: AffinityConfig<T>,
        y_affinity: AffinityConfig<T>,
        wy: SparseMatrix<T>,
        wx: Option<SparseMatrix<T>>,
        singular_values: Vec<T>,
        f: DenseMatrix<T>,
        g: DenseMatrix<T>,
        diagnostics: NccaDiagnostics,
    ) -> Result<Self> {
        let n = train_x.rows();
        let l1 = singular_values.len();
        if l1 < 2 || f.shape() != (n, l1) || g.shape() != (n, l1) {
            return Err(Error::dims("projection tables do not match the singular values"));
        }
        if wy.shape() != (n, n) || wx.as_ref().is_some_and(|w| w.shape() != (n, n)) {
            return Err(Error::dims("affinity matrices do not match the training set"));
        }
        if wx.is_some() != train_y.is_some() {
            return Err(Error::arg("bidirectional models need both Wx and the second-view inputs"));
        }
        if train_y.as_ref().is_some_and(|y| y.rows() != n) {
            return Err(Error::dims("second-view training inputs do not match the first view"));
        }
        let wy_g = wy.mul_dense(&g)?;
        let wxt_f = match &wx {
            Some(w) => Some(w.transpose().mul_dense(&f)?),
            None => None,
        };
        Ok(Self {
            train_x,
            train_y,
            pca_x,
            pca_y,
            x_affinity,
            y_affinity,
            wy,
            wx,
            singular_values,
            f,
            g,
            diagnostics,
            wy_g,
            wxt_f,
        })
    }

    /// Output dimension `L` (the discarded pair excluded).
    pub fn dim(&self) -> usize {
        self.singular_values.len() - 1
    }

    pub fn n_train(&self) -> usize {
        self.train_x.rows()
    }

    pub fn is_bidirectional(&self) -> bool {
        self.wx.is_some()
    }

    /// Raw input widths of the two views (`None` for the second view of a
    /// one-directional model without PCA).
    pub fn input_dims(&self) -> (usize, Option<usize>) {
        let dx = self.pca_x.as_ref().map_or(self.train_x.cols(), PcaMap::input_dim);
        let dy = match (&self.pca_y, &self.train_y) {
            (Some(p), _) => Some(p.input_dim()),
            (None, Some(y)) => Some(y.cols()),
            (None, None) => None,
        };
        (dx, dy)
    }

    /// Canonical correlations of the returned components, `σ₂ … σ_{L+1}`.
    pub fn correlations(&self) -> &[T] {
        &self.singular_values[1..]
    }
}

pub fn ncca_fit<T: Real>(x: &DenseMatrix<T>, y: &DenseMatrix<T>, config: &NccaConfig<T>) -> Result<NccaModel<T>> {
    ncca_fit_timed(x, y, config).map(|(m, _)| m)
}

/// As [`ncca_fit`], also reporting neighbor-search and optimisation time.
pub fn ncca_fit_timed<T: Real>(
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    config: &NccaConfig<T>,
) -> Result<(NccaModel<T>, FitTimings)> {
    let n = x.rows();
    if y.rows() != n {
        return Err(Error::dims(format!("views have {n} and {} rows", y.rows())));
    }
    if config.dim == 0 {
        return Err(Error::arg("output dimension must be at least 1"));
    }
    if n < config.dim + 2 {
        return Err(Error::arg(format!(
            "{n} samples cannot support {} components (need at least {})",
            config.dim,
            config.dim + 2
        )));
    }
    if !(config.sigma1_tolerance >= 0.0) {
        return Err(Error::arg("sigma1 tolerance must be nonnegative"));
    }
    let start = Instant::now();
    let (pca_x, xr) = maybe_pca(x, config.pca_x)?;
    let (pca_y, yr) = maybe_pca(y, config.pca_y)?;
    let x_affinity = config.x_affinity.resolve(&xr)?;
    let y_affinity = config.y_affinity.resolve(&yr)?;
    let (score, search_secs) = build_timed(&xr, &yr, &x_affinity, &y_affinity)?;
    let ScoreMatrix { s, wx, wy } = score;
    let s = match config.retruncate {
        Some(0) => return Err(Error::arg("re-truncation must keep at least one entry per row")),
        Some(m) => s.truncate_rows(m),
        None => s,
    };

    let rank = config.dim + 1;
    let svd: SvdResult<T> = match config.solver {
        SvdSolver::Randomized => truncated_svd(&s, rank, &config.svd)?,
        SvdSolver::Dense => dense_svd(&s.to_dense())?.truncate(rank),
    };
    drop(s);
    let root_n = T::from_count(n).sqrt();
    let f = svd.u.scale(root_n);
    let g = svd.v.scale(root_n);

    let first = f.column(0);
    let mean = first.iter().copied().sum::<T>() / T::from_count(n);
    let var = first.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / T::from_count(n);
    let diagnostics = NccaDiagnostics {
        sigma1_deviation: (svd.singular_values[0] - T::one()).abs().as_f64(),
        first_vector_cv: (var.sqrt() / mean.abs()).as_f64(),
    };
    if diagnostics.sigma1_deviation > config.sigma1_tolerance {
        log::warn!(
            "leading singular value {} deviates from 1 by more than {}",
            svd.singular_values[0],
            config.sigma1_tolerance
        );
    }
    if !(diagnostics.first_vector_cv <= MAX_FIRST_VECTOR_CV) {
        log::warn!(
            "first singular vector is far from constant (coefficient of variation {:.3}); \
             the densities may be poorly sampled",
            diagnostics.first_vector_cv
        );
    }

    let (wx, train_y) = if config.bidirectional {
        (Some(wx), Some(yr))
    } else {
        (None, None)
    };
    let model = NccaModel::from_parts(
        xr,
        train_y,
        pca_x,
        pca_y,
        x_affinity,
        y_affinity,
        wy,
        wx,
        svd.singular_values,
        f,
        g,
        diagnostics,
    )?;
    let total = start.elapsed().as_secs_f64();
    let timings = FitTimings {
        neighbor_search_secs: search_secs,
        optimization_secs: (total - search_secs).max(0.0),
    };
    Ok((model, timings))
}

/// Training projections `(F, G)` without the discarded first column.
pub fn ncca_project_train<T: Real>(model: &NccaModel<T>) -> (DenseMatrix<T>, DenseMatrix<T>) {
    let l1 = model.singular_values.len();
    (model.f.select_columns(1..l1), model.g.select_columns(1..l1))
}

fn nystrom<T: Real>(rows: &[AffinityRow<T>], table: &DenseMatrix<T>, sigma: &[T]) -> DenseMatrix<T> {
    let l = sigma.len() - 1;
    let out: Vec<T> = rows
        .par_iter()
        .flat_map_iter(|r| {
            let mut acc = vec![T::zero(); l];
            for (&j, &w) in r.indices.iter().zip(&r.weights) {
                let t = table.row(j);
                for (a, &v) in acc.iter_mut().zip(&t[1..]) {
                    *a += w * v;
                }
            }
            acc.into_iter().zip(&sigma[1..]).map(|(a, &s)| a / s)
        })
        .collect();
    DenseMatrix::new(rows.len(), l, out).expect("finite projections")
}

/// Nyström projection of first-view inputs, one row per query.
pub fn ncca_project_x_batch<T: Real>(model: &NccaModel<T>, x_new: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let (dx, _) = model.input_dims();
    if x_new.cols() != dx {
        return Err(Error::dims(format!("first view expects {dx} columns, got {}", x_new.cols())));
    }
    let xr = apply_optional(model.pca_x.as_ref(), x_new)?;
    let rows = affinity_rows(&xr, &model.train_x, &model.x_affinity)?;
    Ok(nystrom(&rows, &model.wy_g, &model.singular_values))
}

/// Nyström projection of second-view inputs; needs a bidirectional model.
pub fn ncca_project_y_batch<T: Real>(model: &NccaModel<T>, y_new: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let (Some(train_y), Some(table)) = (&model.train_y, &model.wxt_f) else {
        return Err(Error::arg(
            "model was fitted without bidirectional projection; second-view inputs cannot be projected",
        ));
    };
    let (_, dy) = model.input_dims();
    let dy = dy.expect("bidirectional model knows its second view");
    if y_new.cols() != dy {
        return Err(Error::dims(format!("second view expects {dy} columns, got {}", y_new.cols())));
    }
    let yr = apply_optional(model.pca_y.as_ref(), y_new)?;
    let rows = affinity_rows(&yr, train_y, &model.y_affinity)?;
    Ok(nystrom(&rows, table, &model.singular_values))
}

pub fn ncca_project_x<T: Real>(model: &NccaModel<T>, x_new: &[T]) -> Result<Vec<T>> {
    let q = DenseMatrix::new(1, x_new.len(), x_new.to_vec())?;
    Ok(ncca_project_x_batch(model, &q)?.into_vec())
}

pub fn ncca_project_y<T: Real>(model: &NccaModel<T>, y_new: &[T]) -> Result<Vec<T>> {
    let q = DenseMatrix::new(1, y_new.len(), y_new.to_vec())?;
    Ok(ncca_project_y_batch(model, &q)?.into_vec())
}
