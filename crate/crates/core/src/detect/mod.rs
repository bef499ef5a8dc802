//! Subspace models, the Q-statistic threshold and snapshot flagging.

mod model;
mod report;
mod threshold;

pub use model::{
    build_pca_model, build_rbad_model, build_sspbad_candidates, build_sspbad_draws, project,
    Method, SubspaceModel,
};
pub use report::{
    detect, spe_per_snapshot, sspbad_select, sspbad_select_index, DetectionReport, ModelSummary,
};
pub use threshold::{q_threshold, QThreshold, DEGENERATE_RESIDUAL_FRACTION};

use crate::error::Result;
use crate::linalg::Matrix;
use crate::random::{EnsembleKind, SeedSpec};

/// Confidence `1 - β = 99.5%`.
pub const DEFAULT_BETA: f64 = 0.005;
pub const DEFAULT_POWER_EXPONENT: u32 = 2;

// child streams of a detector seed
const STREAM_RBAD: u8 = 0;
const STREAM_SSPBAD: u8 = 1;

/// Everything needed to fit one method and flag snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub method: Method,
    pub rank: usize,
    pub power_exponent: u32,
    pub beta: f64,
    pub ensembles: Vec<EnsembleKind>,
    /// Random matrices drawn per ensemble for SSPBAD.
    pub draws_per_ensemble: usize,
    /// Center traffic for the randomized methods (PCA always centers).
    pub centered: bool,
    pub seed: SeedSpec,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            method: Method::Pca,
            rank: 24,
            power_exponent: DEFAULT_POWER_EXPONENT,
            beta: DEFAULT_BETA,
            ensembles: EnsembleKind::ALL.to_vec(),
            draws_per_ensemble: 1,
            centered: false,
            seed: SeedSpec::new(0, 0),
        }
    }
}

/// Fitted models for one method. SSPBAD keeps every candidate; the choice
/// among them is made per detection run.
#[derive(Debug, Clone)]
pub struct FittedDetector {
    pub models: Vec<SubspaceModel>,
}

impl FittedDetector {
    pub fn fit(y: &Matrix, cfg: &DetectorConfig) -> Result<Self> {
        let models = match cfg.method {
            Method::Pca => vec![build_pca_model(y, cfg.rank)?],
            Method::Rbad => vec![build_rbad_model(
                y,
                cfg.rank,
                cfg.power_exponent,
                cfg.seed.child(STREAM_RBAD),
                cfg.centered,
            )?],
            Method::Sspbad => build_sspbad_draws(
                y,
                cfg.rank,
                &cfg.ensembles,
                cfg.draws_per_ensemble,
                cfg.seed.child(STREAM_SSPBAD),
                cfg.centered,
            )?,
        };
        Ok(FittedDetector { models })
    }

    /// Detection at `rank` (the basis does not depend on it). For several
    /// candidates the one flagging the most snapshots is kept.
    pub fn detect_at(&self, y: &Matrix, rank: usize, beta: f64) -> Result<DetectionReport> {
        let reports = self
            .models
            .iter()
            .map(|m| detect(&m.with_rank(rank)?, y, beta))
            .collect::<Result<Vec<_>>>()?;
        sspbad_select(reports)
    }
}

/// Fits `cfg.method` on `y` and flags its snapshots.
pub fn run_detector(y: &Matrix, cfg: &DetectorConfig) -> Result<DetectionReport> {
    FittedDetector::fit(y, cfg)?.detect_at(y, cfg.rank, cfg.beta)
}
