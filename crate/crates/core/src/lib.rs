//! Canonical correlation analysis in three flavours: linear CCA, partially
//! linear CCA (one linear view, one nonparametric view) and nonparametric CCA
//! built from k-nearest-neighbor truncated Gaussian kernel density estimates.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`). The aliases at the
//! crate root fix the scalar to `f64`, which is what the file formats in
//! [`dataio`] store and what the command-line frontend uses.
//!
//! ```
//! use ncca_core::{dataio, ncca};
//!
//! let data = dataio::gen_spiral_pair::<f64>(300, 0.01, 1.5, 7).unwrap();
//! let config = ncca::NccaConfig::new(1);
//! let model = ncca::ncca_fit(&data.x, &data.y, &config).unwrap();
//! let (f, g) = ncca::ncca_project_train(&model);
//! assert_eq!(f.shape(), (300, 1));
//! assert_eq!(g.shape(), (300, 1));
//! ```

pub mod affinity;
pub mod cca;
pub mod dataio;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod ncca;
pub mod neighbors;
pub mod plcca;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Wall-clock split of a fit into neighbor search and the remaining
/// optimisation work.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FitTimings {
    pub neighbor_search_secs: f64,
    pub optimization_secs: f64,
}

/// Dense row-major `f64` matrix.
pub type Matrix = linalg::DenseMatrix<f64>;
/// Compressed-sparse-row `f64` matrix.
pub type SparseMatrix = linalg::SparseMatrix<f64>;
pub type SvdResult = linalg::SvdResult<f64>;
pub type PcaMap = linalg::PcaMap<f64>;
pub type KnnResult = neighbors::KnnResult<f64>;
pub type AffinityConfig = affinity::AffinityConfig<f64>;
pub type CcaModel = cca::CcaModel<f64>;
pub type PlccaModel = plcca::PlccaModel<f64>;
pub type PlccaConfig = plcca::PlccaConfig<f64>;
pub type NccaModel = ncca::NccaModel<f64>;
pub type NccaConfig = ncca::NccaConfig<f64>;
pub type EvalReport = metrics::EvalReport<f64>;
pub type PairedDataset = dataio::PairedDataset<f64>;
pub type Model = dataio::Model<f64>;
