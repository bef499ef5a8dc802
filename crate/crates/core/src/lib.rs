//! Subspace anomaly detection for link-traffic matrices.
//!
//! Traffic `Y` (links x snapshots) is split into a normal part, the
//! projection onto the leading `r` vectors of an orthonormal basis, and a
//! residual. Snapshots whose residual energy (SPE) exceeds the Q-statistic
//! threshold are flagged. Three ways of building the basis are provided:
//!
//! * `pca`: eigenvectors of the sample covariance.
//! * `rbad`: QR of a power-iterated random range sketch `(YYᵀ)^q·Y·Φ`.
//! * `sspbad`: one power step `Y·Yᵀ·T` per random ensemble, keeping the
//!   candidate that flags the most snapshots.
//!
//! The `traffic` module builds synthetic scenarios with known anomalies and
//! `eval` scores detectors against them.

pub mod cli;
pub mod detect;
mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod normal;
pub mod random;
pub mod traffic;

pub use error::{Error, Result};
pub use linalg::Matrix;
