//! File formats and synthetic data.
//!
//! Matrices are stored either as comma-separated text or in the `NCM1` binary
//! layout: the magic bytes `NCM1`, a little-endian `u32` version (1), `u64`
//! row and column counts, then the values as little-endian `f64` in row-major
//! order. Fitted models go into the sectioned `NCCM` container described in
//! [`save_model`].

mod matrix;
mod model;
mod synth;

pub use matrix::{read_matrix, read_matrix_from, write_matrix, write_matrix_to, Format};
pub use model::{load_model, model_from_bytes, model_to_bytes, save_model, Method, Model};
pub use synth::{gen_gaussian_pair, gen_identical_views, gen_spiral_pair, PairedDataset};
