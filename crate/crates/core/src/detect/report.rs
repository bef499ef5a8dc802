use crate::detect::model::{project, Method, SubspaceModel};
use crate::detect::threshold::{q_threshold, QThreshold};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::random::EnsembleKind;

/// Identifies the model a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSummary {
    pub method: Method,
    pub rank: usize,
    pub ensemble: Option<EnsembleKind>,
    pub power_exponent: Option<u32>,
}

impl From<&SubspaceModel> for ModelSummary {
    fn from(m: &SubspaceModel) -> Self {
        ModelSummary {
            method: m.method,
            rank: m.rank,
            ensemble: m.ensemble,
            power_exponent: m.power_exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    /// Squared residual norm per snapshot.
    pub spe: Vec<f64>,
    /// `None` when the residual spectrum is all zero; nothing is flagged then.
    pub threshold: Option<QThreshold>,
    pub flags: Vec<bool>,
    pub model: ModelSummary,
}

impl DetectionReport {
    /// Threshold value, `+inf` when there is no residual energy.
    pub fn q_beta(&self) -> f64 {
        self.threshold.map_or(f64::INFINITY, |t| t.q_beta)
    }

    pub fn flag_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Matrix-level SPE, `‖Ỹ‖_F²`.
    pub fn total_spe(&self) -> f64 {
        self.spe.iter().sum()
    }

    /// A report that flags nothing, for spectra where no threshold exists.
    pub fn unflagged(spe: Vec<f64>, model: ModelSummary) -> Self {
        let flags = vec![false; spe.len()];
        DetectionReport {
            spe,
            threshold: None,
            flags,
            model,
        }
    }
}

/// Squared Euclidean norm of every column.
pub fn spe_per_snapshot(y_tilde: &Matrix) -> Vec<f64> {
    let mut spe = vec![0.0; y_tilde.cols()];
    for i in 0..y_tilde.rows() {
        for (s, &v) in spe.iter_mut().zip(y_tilde.row(i)) {
            *s += v * v;
        }
    }
    spe
}

/// Projects `y`, computes per-snapshot SPE, and flags snapshots above `Q_β`.
///
/// An all-zero residual spectrum yields a report with no threshold and no
/// flags; other threshold failures are returned as errors.
pub fn detect(model: &SubspaceModel, y: &Matrix, beta: f64) -> Result<DetectionReport> {
    let (_, y_tilde) = project(model, y)?;
    let spe = spe_per_snapshot(&y_tilde);
    let summary = ModelSummary::from(model);
    let threshold = match q_threshold(&model.variances, model.rank, beta) {
        Ok(t) => t,
        Err(Error::DegenerateSpectrum) => return Ok(DetectionReport::unflagged(spe, summary)),
        Err(e) => return Err(e),
    };
    let flags = spe.iter().map(|&s| s > threshold.q_beta).collect();
    Ok(DetectionReport {
        spe,
        threshold: Some(threshold),
        flags,
        model: summary,
    })
}

/// Index of the report with the most flags; the first one wins ties.
pub fn sspbad_select_index(reports: &[DetectionReport]) -> Result<usize> {
    if reports.is_empty() {
        return Err(Error::invalid("no candidate reports to select from"));
    }
    let mut best = 0;
    for (i, r) in reports.iter().enumerate().skip(1) {
        if r.flag_count() > reports[best].flag_count() {
            best = i;
        }
    }
    Ok(best)
}

/// Keeps the candidate that flags the most snapshots. Candidates built by
/// `build_sspbad_candidates` arrive in ensemble order, so ties go to the
/// earliest ensemble.
pub fn sspbad_select(mut reports: Vec<DetectionReport>) -> Result<DetectionReport> {
    let best = sspbad_select_index(&reports)?;
    Ok(reports.swap_remove(best))
}
