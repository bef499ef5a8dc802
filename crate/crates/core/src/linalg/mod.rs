//! Dense matrix type and the numerical kernels the detectors rely on.

mod eigen;
mod matrix;
mod qr;
mod stats;

pub use eigen::{sym_eig, EigenDecomposition};
pub use matrix::{matmul, Matrix};
pub use qr::householder_qr;
pub use stats::{center_rows, row_covariance, row_variance};
