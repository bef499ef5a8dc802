//! Ground-truth scoring and the two experiment harnesses: captured-variance
//! comparison and detection rate against the normal-subspace rank.

use rayon::prelude::*;

use crate::detect::{
    build_pca_model, build_rbad_model, build_sspbad_candidates, detect, DetectionReport,
    DetectorConfig, FittedDetector, Method, ModelSummary, DEFAULT_BETA, DEFAULT_POWER_EXPONENT,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::random::{EnsembleKind, SeedSpec};
use crate::traffic::{assemble_scenario, ScenarioConfig};

// child stream of a trial seed reserved for the detectors; scenario
// components use tags 0..=4
const STREAM_DETECTORS: u8 = 16;

/// Snapshot-level confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// `tp/(tp+fn)`, `None` when there are no anomalous snapshots.
    pub fn tpr(&self) -> Option<f64> {
        let pos = self.tp + self.fn_;
        (pos > 0).then(|| self.tp as f64 / pos as f64)
    }

    /// `fp/(fp+tn)`, `None` when every snapshot is anomalous.
    pub fn far(&self) -> Option<f64> {
        let neg = self.fp + self.tn;
        (neg > 0).then(|| self.fp as f64 / neg as f64)
    }
}

pub fn score_flags(flags: &[bool], labels: &[bool]) -> Result<ConfusionCounts> {
    if flags.len() != labels.len() {
        return Err(Error::invalid(format!(
            "flags ({}) and labels ({}) differ in length",
            flags.len(),
            labels.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&f, &l) in flags.iter().zip(labels) {
        match (f, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn score(report: &DetectionReport, labels: &[bool]) -> Result<ConfusionCounts> {
    score_flags(&report.flags, labels)
}

/// `tp / (tp + fn + fp)`: the overlap between flagged and truly anomalous
/// snapshots. Rises with detections, falls with false alarms. Defined as 1
/// when nothing is anomalous and nothing is flagged.
pub fn detection_rate(c: &ConfusionCounts) -> f64 {
    let denom = c.tp + c.fn_ + c.fp;
    if denom == 0 {
        1.0
    } else {
        c.tp as f64 / denom as f64
    }
}

/// One scored detection run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub method: Method,
    pub rank: usize,
    pub trial: usize,
    pub seed: SeedSpec,
    pub detection_rate: f64,
    pub tpr: Option<f64>,
    pub far: Option<f64>,
    pub flag_count: usize,
    pub counts: ConfusionCounts,
}

/// Mean and standard deviation of the detection rate per rank.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub method: Method,
    pub ranks: Vec<usize>,
    pub mean: Vec<f64>,
    /// Sample standard deviation (`trials - 1` divisor); 0 for one trial.
    pub std_dev: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Scenario template; its seed's `master_seed` is the sweep master seed
    /// and trial `i` uses stream `i`.
    pub scenario: ScenarioConfig,
    pub methods: Vec<Method>,
    pub ranks: Vec<usize>,
    pub trials: usize,
    pub beta: f64,
    pub power_exponent: u32,
    pub ensembles: Vec<EnsembleKind>,
    pub draws_per_ensemble: usize,
    pub centered: bool,
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            scenario: ScenarioConfig::default(),
            methods: Method::ALL.to_vec(),
            ranks: vec![8, 16, 24, 32, 48, 64],
            trials: 20,
            beta: DEFAULT_BETA,
            power_exponent: DEFAULT_POWER_EXPONENT,
            ensembles: EnsembleKind::ALL.to_vec(),
            draws_per_ensemble: 1,
            centered: false,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by method, then rank, then trial.
    pub rows: Vec<MetricRow>,
    pub curves: Vec<SweepCurve>,
}

/// Seed of trial `i` under `master_seed`.
pub fn trial_seed(master_seed: u64, trial: usize) -> SeedSpec {
    SeedSpec::new(master_seed, trial as u64)
}

/// Seed of the detectors fitted on the scenario generated from `scenario_seed`.
pub fn detector_seed(scenario_seed: SeedSpec) -> SeedSpec {
    scenario_seed.child(STREAM_DETECTORS)
}

/// Detection rate against rank over fresh scenarios.
///
/// Each trial generates its own scenario and fits every method once; the
/// basis does not depend on the rank, so each rank reuses the fitted basis.
/// Spectra with no defined threshold score as zero-flag runs.
pub fn sweep_rank(cfg: &SweepConfig) -> Result<SweepResult> {
    let m = cfg.scenario.m;
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if cfg.methods.is_empty() || cfg.ranks.is_empty() {
        return Err(Error::invalid("methods and rank grid must be nonempty"));
    }
    if let Some(&bad) = cfg.ranks.iter().find(|&&r| r == 0 || r >= m) {
        return Err(Error::invalid(format!(
            "rank {bad} outside [1, {}]",
            m.saturating_sub(1)
        )));
    }
    cfg.scenario.validate()?;

    let master = cfg.scenario.seed.master_seed;
    let run = |trial: usize| run_trial(cfg, trial, trial_seed(master, trial));
    let per_trial: Vec<Vec<MetricRow>> = if cfg.parallel {
        (0..cfg.trials)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()?
    } else {
        (0..cfg.trials).map(run).collect::<Result<_>>()?
    };

    let mut rows: Vec<MetricRow> = per_trial.into_iter().flatten().collect();
    let method_pos = |m: Method| cfg.methods.iter().position(|&x| x == m).unwrap();
    let rank_pos = |r: usize| cfg.ranks.iter().position(|&x| x == r).unwrap();
    rows.sort_by_key(|row| (method_pos(row.method), rank_pos(row.rank), row.trial));

    let curves = cfg
        .methods
        .iter()
        .map(|&method| {
            let (mean, std_dev) = cfg
                .ranks
                .iter()
                .map(|&rank| {
                    let rates: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.method == method && r.rank == rank)
                        .map(|r| r.detection_rate)
                        .collect();
                    mean_and_sd(&rates)
                })
                .unzip();
            SweepCurve {
                method,
                ranks: cfg.ranks.clone(),
                mean,
                std_dev,
            }
        })
        .collect();

    Ok(SweepResult { rows, curves })
}

fn run_trial(cfg: &SweepConfig, trial: usize, seed: SeedSpec) -> Result<Vec<MetricRow>> {
    let scenario = assemble_scenario(&ScenarioConfig {
        seed,
        ..cfg.scenario.clone()
    })?;
    let y = &scenario.y;
    let mut rows = Vec::with_capacity(cfg.methods.len() * cfg.ranks.len());
    for &method in &cfg.methods {
        let det_cfg = DetectorConfig {
            method,
            rank: cfg.ranks[0],
            power_exponent: cfg.power_exponent,
            beta: cfg.beta,
            ensembles: cfg.ensembles.clone(),
            draws_per_ensemble: cfg.draws_per_ensemble,
            centered: cfg.centered,
            seed: detector_seed(seed),
        };
        let fitted = FittedDetector::fit(y, &det_cfg)?;
        for &rank in &cfg.ranks {
            let report = detect_or_unflagged(&fitted, y, rank, cfg.beta)?;
            let counts = score(&report, &scenario.labels)?;
            rows.push(MetricRow {
                method,
                rank,
                trial,
                seed,
                detection_rate: detection_rate(&counts),
                tpr: counts.tpr(),
                far: counts.far(),
                flag_count: report.flag_count(),
                counts,
            });
        }
    }
    Ok(rows)
}

// a spectrum with no defined threshold scores as "nothing flagged"
fn detect_or_unflagged(
    fitted: &FittedDetector,
    y: &Matrix,
    rank: usize,
    beta: f64,
) -> Result<DetectionReport> {
    let reports = fitted
        .models
        .iter()
        .map(|model| {
            let model = model.with_rank(rank)?;
            match detect(&model, y, beta) {
                Err(Error::ThresholdUndefined(_)) => {
                    let (_, res) = crate::detect::project(&model, y)?;
                    Ok(DetectionReport::unflagged(
                        crate::detect::spe_per_snapshot(&res),
                        ModelSummary::from(&model),
                    ))
                }
                other => other,
            }
        })
        .collect::<Result<Vec<_>>>()?;
    crate::detect::sspbad_select(reports)
}

fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Side-by-side captured variances, all models fitted on centered traffic.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTable {
    pub pca: Vec<f64>,
    pub rbad: Vec<f64>,
    pub sspbad: Vec<(EnsembleKind, Vec<f64>)>,
    pub top: usize,
    /// Max over the first `top` indices of `|λ_method - λ_pca| / λ_pca`.
    pub rbad_max_rel_dev: f64,
    pub sspbad_max_rel_dev: Vec<f64>,
}

pub fn max_relative_deviation(reference: &[f64], other: &[f64], top: usize) -> f64 {
    reference
        .iter()
        .zip(other)
        .take(top)
        .map(|(&a, &b)| {
            if a == 0.0 {
                if b == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                ((b - a) / a).abs()
            }
        })
        .fold(0.0, f64::max)
}

pub fn variance_compare(
    y: &Matrix,
    r: usize,
    q_exp: u32,
    kinds: &[EnsembleKind],
    seed: SeedSpec,
) -> Result<VarianceTable> {
    let pca = build_pca_model(y, r)?;
    let rbad = build_rbad_model(y, r, q_exp, seed.child(0), true)?;
    let sspbad = build_sspbad_candidates(y, r, kinds, seed.child(1), true)?;

    let rbad_max_rel_dev = max_relative_deviation(&pca.variances, &rbad.variances, r);
    let sspbad_max_rel_dev = sspbad
        .iter()
        .map(|m| max_relative_deviation(&pca.variances, &m.variances, r))
        .collect();
    Ok(VarianceTable {
        pca: pca.variances,
        rbad: rbad.variances,
        sspbad: sspbad
            .into_iter()
            .map(|m| {
                (
                    m.ensemble.expect("sspbad candidates carry their ensemble"),
                    m.variances,
                )
            })
            .collect(),
        top: r,
        rbad_max_rel_dev,
        sspbad_max_rel_dev,
    })
}
