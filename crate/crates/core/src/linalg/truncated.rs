//! Randomized truncated SVD of sparse matrices.
//!
//! A Gaussian test block is pushed through `A` and `power_iters` rounds of
//! `A·Aᵀ`; every intermediate block is kept, so the search space is a block
//! Krylov space rather than only its last power. A Rayleigh–Ritz step on that
//! space gives the singular triplet estimates. When the residuals
//! `‖A vᵢ − σᵢ uᵢ‖` are not yet below `tol · σ₁` the leading left Ritz vectors
//! seed another round.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::dense::dot;
use super::eigen::fix_column_signs;
use super::{dense_svd, DenseMatrix, SparseMatrix, SvdResult};
use crate::{Error, Real, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSvdOptions {
    pub seed: u64,
    /// Extra columns in the random test block beyond the requested rank.
    pub oversample: usize,
    /// Rounds of `A·Aᵀ` applied to the test block per restart cycle.
    pub power_iters: usize,
    /// Residual target relative to the largest singular value.
    pub tol: f64,
    pub max_cycles: usize,
}

impl Default for TruncatedSvdOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            oversample: 10,
            power_iters: 2,
            tol: 1e-10,
            max_cycles: 500,
        }
    }
}

pub(crate) fn gaussian_vector<T: Real>(n: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    (0..n).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect()
}

/// Orthonormalises `block` against `basis` and itself (two Gram–Schmidt
/// passes). Dependent columns are dropped, or replaced by random directions
/// when `fill` is set. At most `cap` columns are returned.
fn orthonormalize<T: Real>(
    block: Vec<Vec<T>>,
    basis: &[Vec<T>],
    cap: usize,
    fill: bool,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<T>> {
    let dim = block.first().map_or(0, Vec::len);
    let mut accepted: Vec<Vec<T>> = Vec::with_capacity(block.len());
    let dep_tol = T::lit(1e-10).max(T::lit(100.0) * T::epsilon());
    for col in block {
        if accepted.len() >= cap {
            break;
        }
        let mut w = col;
        let mut attempts = 0;
        loop {
            let orig = dot(&w, &w).sqrt();
            for _ in 0..2 {
                for q in basis.iter().chain(accepted.iter()) {
                    let p = dot(&w, q);
                    w.iter_mut().zip(q).for_each(|(wi, &qi)| *wi -= p * qi);
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > dep_tol * orig && norm > T::min_positive_value() {
                w.iter_mut().for_each(|x| *x /= norm);
                accepted.push(w);
                break;
            }
            if !fill || attempts > 8 {
                break;
            }
            attempts += 1;
            w = gaussian_vector(dim, rng);
        }
    }
    accepted
}

/// Thin QR by twice-repeated modified Gram–Schmidt. Rank-deficient columns get
/// a zero diagonal in `R` and a random unit direction in `Q`, so that `Q`
/// stays orthonormal and `H = Q·R` holds.
fn qr<T: Real>(h: &DenseMatrix<T>, rng: &mut ChaCha8Rng) -> (Vec<Vec<T>>, DenseMatrix<T>) {
    let k = h.cols();
    let mut q: Vec<Vec<T>> = Vec::with_capacity(k);
    let mut r = DenseMatrix::zeros(k, k);
    for (j, mut w) in h.columns().into_iter().enumerate() {
        let orig = dot(&w, &w).sqrt();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let p = dot(&w, qi);
                r[(i, j)] += p;
                w.iter_mut().zip(qi).for_each(|(wi, &qv)| *wi -= p * qv);
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm > T::lit(1e-13) * orig && norm > T::min_positive_value() {
            r[(j, j)] = norm;
            w.iter_mut().for_each(|x| *x /= norm);
            q.push(w);
        } else {
            let fill = orthonormalize(vec![gaussian_vector(h.rows(), rng)], &q, 1, true, rng);
            q.push(fill.into_iter().next().expect("room for a direction"));
        }
    }
    (q, r)
}

/// Top-`r` singular triplets of a sparse matrix.
pub fn truncated_svd<T: Real>(
    a: &SparseMatrix<T>,
    r: usize,
    opts: &TruncatedSvdOptions,
) -> Result<SvdResult<T>> {
    let (m, n) = a.shape();
    let min_side = m.min(n);
    if r == 0 || r > min_side {
        return Err(Error::arg(format!(
            "rank {r} outside 1..={min_side} for a {m}x{n} matrix"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    let block = (r + opts.oversample).min(min_side);
    let at = a.transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let omega = DenseMatrix::from_columns(n, &(0..block).map(|_| gaussian_vector(n, &mut rng)).collect::<Vec<_>>());
    let mut start = orthonormalize(a.mul_dense(&omega)?.columns(), &[], block, true, &mut rng);

    // accumulated rounding in the residual sums bounds what single precision can reach
    let floor = T::lit(64.0) * T::from_count(m).sqrt() * T::epsilon();
    let tol = T::lit(opts.tol).max(floor);
    let mut worst = T::infinity();
    for _cycle in 0..opts.max_cycles.max(1) {
        let mut basis = start.clone();
        let mut z = start;
        for _ in 0..opts.power_iters.max(1) {
            if basis.len() >= min_side || z.is_empty() {
                break;
            }
            let zm = DenseMatrix::from_columns(m, &z);
            let w = a.mul_dense(&at.mul_dense(&zm)?)?;
            z = orthonormalize(w.columns(), &basis, min_side - basis.len(), false, &mut rng);
            basis.extend(z.iter().cloned());
        }
        let full_space = basis.len() >= min_side;
        let k = DenseMatrix::from_columns(m, &basis);
        let h = at.mul_dense(&k)?;
        let (qh, rm) = qr(&h, &mut rng);
        let small = dense_svd(&rm)?;
        // Kᵀ·A = Hᵀ = Rᵀ·Qhᵀ = Vr·Σ·Urᵀ·Qhᵀ, so A ≈ (K·Vr)·Σ·(Qh·Ur)ᵀ
        let u_all = k.matmul(&small.v)?;
        let v_all = DenseMatrix::from_columns(n, &qh).matmul(&small.u)?;
        let sigma = small.singular_values;

        let u_r = u_all.select_columns(0..r);
        let v_r = v_all.select_columns(0..r);
        let av = a.mul_dense(&v_r)?;
        worst = T::zero();
        for i in 0..r {
            let res = (0..m)
                .map(|row| {
                    let d = av[(row, i)] - sigma[i] * u_r[(row, i)];
                    d * d
                })
                .sum::<T>()
                .sqrt();
            worst = worst.max(res);
        }
        let scale = sigma[0];
        if worst <= tol * scale || full_space && worst <= T::lit(1e-8).max(floor) * scale {
            let mut u = u_r;
            let mut v = v_r;
            fix_column_signs(&mut u, Some(&mut v));
            return Ok(SvdResult {
                u,
                singular_values: sigma[..r].to_vec(),
                v,
            });
        }
        start = u_all.select_columns(0..block).columns();
    }
    Err(Error::NoConvergence {
        what: "truncated SVD",
        iterations: opts.max_cycles,
        residual: worst.as_f64(),
    })
}
