//! Dense and sparse linear algebra: symmetric eigendecomposition, PSD inverse
//! square roots, Jacobi SVD, randomized truncated SVD of CSR matrices,
//! sparse-sparse products and PCA.
//!
//! Spectral outputs use a fixed sign convention: the largest-magnitude entry
//! of every left vector (or eigenvector) is positive.

mod dense;
mod eigen;
mod pca;
mod sparse;
mod svd;
mod truncated;

pub use dense::DenseMatrix;
pub use eigen::{inv_sqrt_psd, sym_eig, SymEigen, DEFAULT_RELATIVE_FLOOR};
pub use pca::{apply_optional, maybe_pca, pca_apply, pca_fit, PcaDim, PcaMap};
pub use sparse::{spgemm, SparseMatrix};
pub use svd::{dense_svd, SvdResult};
pub use truncated::{truncated_svd, TruncatedSvdOptions};

pub(crate) use dense::sq_dist;
pub(crate) use eigen::{inv_sqrt_from_eigen, spectral_function};
