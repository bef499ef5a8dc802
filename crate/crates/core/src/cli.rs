//! Command-line front end: `generate`, `detect`, `sweep` and `variances`.
//!
//! Settings resolve as defaults, then a `--config` file, then flags. Every
//! run writes the resolved settings to `config.echo`, which is itself a valid
//! `--config` file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::detect::{
    DetectionReport, DetectorConfig, FittedDetector, Method, DEFAULT_BETA, DEFAULT_POWER_EXPONENT,
};
use crate::error::{Error, Result};
use crate::eval::{
    detection_rate, detector_seed, score, sweep_rank, trial_seed, variance_compare, SweepConfig,
    SweepResult, VarianceTable,
};
use crate::io::{
    config_to_text, format_f64, labels_to_csv, matrix_to_csv, read_config, read_labels,
    read_matrix_csv, ConfigEntry, OutputSet,
};
use crate::linalg::Matrix;
use crate::random::EnsembleKind;
use crate::traffic::{assemble_scenario, default_anomaly_count, ScenarioConfig};

pub const ECHO_FILE: &str = "config.echo";

#[derive(Debug, Parser)]
#[command(
    name = "subspace-anomaly",
    version,
    about = "Randomized-basis subspace anomaly detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scenario and write its matrices.
    Generate(Options),
    /// Flag anomalous snapshots of a traffic matrix.
    Detect(Options),
    /// Detection rate against rank over repeated trials.
    Sweep(Options),
    /// Captured variance per basis index for every method.
    Variances(Options),
}

impl Command {
    pub fn options(&self) -> &Options {
        match self {
            Command::Generate(o)
            | Command::Detect(o)
            | Command::Sweep(o)
            | Command::Variances(o) => o,
        }
    }

    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Generate(_) => CommandKind::Generate,
            Command::Detect(_) => CommandKind::Detect,
            Command::Sweep(_) => CommandKind::Sweep,
            Command::Variances(_) => CommandKind::Variances,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Generate,
    Detect,
    Sweep,
    Variances,
}

impl CommandKind {
    pub fn tag(self) -> &'static str {
        match self {
            CommandKind::Generate => "generate",
            CommandKind::Detect => "detect",
            CommandKind::Sweep => "sweep",
            CommandKind::Variances => "variances",
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// `key = value` settings file; keys match the long flag names with `_`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Link count.
    #[arg(long)]
    pub m: Option<usize>,
    /// OD-flow count.
    #[arg(long)]
    pub n: Option<usize>,
    /// Snapshot count.
    #[arg(long)]
    pub t: Option<usize>,
    /// Rank of the generated flows.
    #[arg(long)]
    pub r_true: Option<usize>,
    #[arg(long)]
    pub routing_density: Option<f64>,
    /// Number of anomalous flow entries; defaults to round(0.001·m·t).
    #[arg(long)]
    pub anomaly_count: Option<usize>,
    #[arg(long)]
    pub noise_variance: Option<f64>,
    #[arg(long, alias = "seed")]
    pub master_seed: Option<u64>,
    /// pca, rbad or sspbad.
    #[arg(long)]
    pub method: Option<Method>,
    /// Comma-separated methods compared by `sweep`.
    #[arg(long)]
    pub methods: Option<String>,
    /// Normal-subspace dimension.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Power-iteration exponent for rbad.
    #[arg(long)]
    pub power_exponent: Option<u32>,
    /// False-alarm level of the Q-statistic.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Comma-separated random ensembles for sspbad.
    #[arg(long)]
    pub ensembles: Option<String>,
    /// Random matrices drawn per ensemble for sspbad.
    #[arg(long)]
    pub draws_per_ensemble: Option<usize>,
    /// Comma-separated rank grid for `sweep`.
    #[arg(long)]
    pub ranks: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Center traffic before fitting rbad and sspbad.
    #[arg(long)]
    pub centered: Option<bool>,
    /// Run sweep trials on all cores.
    #[arg(long)]
    pub parallel: Option<bool>,
    /// Scenario directory or traffic CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Label CSV; overrides labels found in an input directory.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub r_true: usize,
    pub routing_density: f64,
    /// `None` means round(0.001·m·t).
    pub anomaly_count: Option<usize>,
    pub noise_variance: f64,
    pub master_seed: u64,
    pub method: Method,
    pub methods: Vec<Method>,
    pub rank: usize,
    pub power_exponent: u32,
    pub beta: f64,
    pub ensembles: Vec<EnsembleKind>,
    pub draws_per_ensemble: usize,
    pub ranks: Vec<usize>,
    pub trials: usize,
    pub centered: bool,
    pub parallel: bool,
    pub input: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for CliConfig {
    fn default() -> Self {
        let scenario = ScenarioConfig::default();
        let sweep = SweepConfig::default();
        CliConfig {
            m: scenario.m,
            n: scenario.n,
            t: scenario.t,
            r_true: scenario.r_true,
            routing_density: scenario.routing_density,
            anomaly_count: None,
            noise_variance: scenario.noise_variance,
            master_seed: 0,
            method: Method::Pca,
            methods: Method::ALL.to_vec(),
            rank: 24,
            power_exponent: DEFAULT_POWER_EXPONENT,
            beta: DEFAULT_BETA,
            ensembles: EnsembleKind::ALL.to_vec(),
            draws_per_ensemble: 1,
            ranks: sweep.ranks,
            trials: sweep.trials,
            centered: false,
            parallel: true,
            input: None,
            labels: None,
            output: None,
        }
    }
}

fn parse_list<T: FromStr>(text: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| format!("'{}': {e}", s.trim()))
        })
        .collect::<std::result::Result<_, _>>()?;
    if items.is_empty() {
        return Err("list is empty".into());
    }
    Ok(items)
}

fn parse_value<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("'{value}': {e}"))
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl CliConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "m" => self.m = parse_value(value)?,
            "n" => self.n = parse_value(value)?,
            "t" => self.t = parse_value(value)?,
            "r_true" => self.r_true = parse_value(value)?,
            "routing_density" => self.routing_density = parse_value(value)?,
            "anomaly_count" => {
                self.anomaly_count = match value {
                    "auto" => None,
                    v => Some(parse_value(v)?),
                }
            }
            "noise_variance" => self.noise_variance = parse_value(value)?,
            "master_seed" => self.master_seed = parse_value(value)?,
            "method" => self.method = parse_value(value)?,
            "methods" => self.methods = parse_list(value)?,
            "rank" => self.rank = parse_value(value)?,
            "power_exponent" => self.power_exponent = parse_value(value)?,
            "beta" => self.beta = parse_value(value)?,
            "ensembles" => self.ensembles = parse_list(value)?,
            "draws_per_ensemble" => self.draws_per_ensemble = parse_value(value)?,
            "ranks" => self.ranks = parse_list(value)?,
            "trials" => self.trials = parse_value(value)?,
            "centered" => self.centered = parse_value(value)?,
            "parallel" => self.parallel = parse_value(value)?,
            "input" => self.input = Some(PathBuf::from(value)),
            "labels" => self.labels = Some(PathBuf::from(value)),
            "output" => self.output = Some(PathBuf::from(value)),
            // written to every echo; the subcommand on the command line rules
            "subcommand" => {}
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    pub fn apply_entries(&mut self, entries: &[ConfigEntry]) -> Result<()> {
        for e in entries {
            self.set(&e.key, &e.value)
                .map_err(|msg| Error::parse(e.line, format!("{}: {msg}", e.key)))?;
        }
        Ok(())
    }

    pub fn apply_options(&mut self, o: &Options) -> Result<()> {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = o.$f.clone() { self.$f = v; } )* };
        }
        take!(
            m,
            n,
            t,
            r_true,
            routing_density,
            noise_variance,
            master_seed,
            method,
            rank,
            draws_per_ensemble,
            power_exponent,
            beta,
            trials,
            centered,
            parallel
        );
        if let Some(v) = o.anomaly_count {
            self.anomaly_count = Some(v);
        }
        for (key, v) in [
            ("methods", &o.methods),
            ("ensembles", &o.ensembles),
            ("ranks", &o.ranks),
        ] {
            if let Some(v) = v {
                self.set(key, v)
                    .map_err(|msg| Error::invalid(format!("--{key}: {msg}")))?;
            }
        }
        if o.input.is_some() {
            self.input = o.input.clone();
        }
        if o.labels.is_some() {
            self.labels = o.labels.clone();
        }
        if o.output.is_some() {
            self.output = o.output.clone();
        }
        Ok(())
    }

    /// Defaults, then `options.config`, then the flags themselves.
    pub fn resolve(options: &Options) -> Result<Self> {
        let mut cfg = CliConfig::default();
        if let Some(path) = &options.config {
            cfg.apply_entries(&read_config(path)?)?;
        }
        cfg.apply_options(options)?;
        Ok(cfg)
    }

    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            m: self.m,
            n: self.n,
            t: self.t,
            r_true: self.r_true,
            routing_density: self.routing_density,
            anomaly_count: self
                .anomaly_count
                .unwrap_or_else(|| default_anomaly_count(self.m, self.t)),
            noise_variance: self.noise_variance,
            seed: trial_seed(self.master_seed, 0),
        }
    }

    pub fn detector(&self, scenario_seed: crate::random::SeedSpec) -> DetectorConfig {
        DetectorConfig {
            method: self.method,
            rank: self.rank,
            power_exponent: self.power_exponent,
            beta: self.beta,
            ensembles: self.ensembles.clone(),
            draws_per_ensemble: self.draws_per_ensemble,
            centered: self.centered,
            seed: detector_seed(scenario_seed),
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            scenario: self.scenario(),
            methods: self.methods.clone(),
            ranks: self.ranks.clone(),
            trials: self.trials,
            beta: self.beta,
            power_exponent: self.power_exponent,
            ensembles: self.ensembles.clone(),
            draws_per_ensemble: self.draws_per_ensemble,
            centered: self.centered,
            parallel: self.parallel,
        }
    }

    /// `config.echo` text; parsing it back gives the same settings.
    pub fn echo(&self, command: CommandKind) -> String {
        let mut entries: Vec<(&str, String)> = vec![
            ("subcommand", command.tag().to_string()),
            ("m", self.m.to_string()),
            ("n", self.n.to_string()),
            ("t", self.t.to_string()),
            ("r_true", self.r_true.to_string()),
            ("routing_density", self.routing_density.to_string()),
            (
                "anomaly_count",
                self.anomaly_count
                    .map_or("auto".to_string(), |s| s.to_string()),
            ),
            ("noise_variance", self.noise_variance.to_string()),
            ("master_seed", self.master_seed.to_string()),
            ("method", self.method.to_string()),
            ("methods", join(&self.methods)),
            ("rank", self.rank.to_string()),
            ("power_exponent", self.power_exponent.to_string()),
            ("beta", self.beta.to_string()),
            ("ensembles", join(&self.ensembles)),
            ("draws_per_ensemble", self.draws_per_ensemble.to_string()),
            ("ranks", join(&self.ranks)),
            ("trials", self.trials.to_string()),
            ("centered", self.centered.to_string()),
            ("parallel", self.parallel.to_string()),
        ];
        for (key, path) in [
            ("input", &self.input),
            ("labels", &self.labels),
            ("output", &self.output),
        ] {
            if let Some(p) = path {
                entries.push((key, p.display().to_string()));
            }
        }
        let rerun = format!(
            "re-run: subspace-anomaly {} --config {ECHO_FILE}",
            command.tag()
        );
        let header = [
            "subspace-anomaly resolved settings",
            rerun.as_str(),
            "detection_rate = tp / (tp + fn + fp); 1 when there are no positives and no flags",
            "anomaly_count = auto means round(0.001 * m * t)",
        ];
        config_to_text(&header, &entries)
    }
}

/// `snapshot,spe,q_beta,flag,label`; the label column is empty without labels.
pub fn report_csv(report: &DetectionReport, labels: Option<&[bool]>) -> String {
    let mut out = String::from("snapshot,spe,q_beta,flag,label\n");
    let q = format_f64(report.q_beta());
    for (j, (&spe, &flag)) in report.spe.iter().zip(&report.flags).enumerate() {
        let label = labels.map_or("", |l| if l[j] { "1" } else { "0" });
        let _ = writeln!(
            out,
            "{j},{},{q},{},{label}",
            format_f64(spe),
            u8::from(flag)
        );
    }
    out
}

fn opt_f64(v: Option<f64>) -> String {
    v.map_or(String::new(), format_f64)
}

/// One row per (method, rank, trial).
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("method,rank,trial,detection_rate,tpr,far,flag_count\n");
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method,
            r.rank,
            r.trial,
            format_f64(r.detection_rate),
            opt_f64(r.tpr),
            opt_f64(r.far),
            r.flag_count
        );
    }
    out
}

/// Mean and sample standard deviation of the detection rate per (method, rank).
pub fn sweep_mean_csv(result: &SweepResult, trials: usize) -> String {
    let mut out = String::from("method,rank,trials,mean_detection_rate,std_detection_rate\n");
    for c in &result.curves {
        for (i, rank) in c.ranks.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{rank},{trials},{},{}",
                c.method,
                format_f64(c.mean[i]),
                format_f64(c.std_dev[i])
            );
        }
    }
    out
}

/// One row per basis index, one column per method or ensemble.
pub fn variances_csv(table: &VarianceTable) -> String {
    let mut out = String::from("index,pca,rbad");
    for (kind, _) in &table.sspbad {
        let _ = write!(out, ",sspbad_{kind}");
    }
    out.push('\n');
    for i in 0..table.pca.len() {
        let _ = write!(
            out,
            "{i},{},{}",
            format_f64(table.pca[i]),
            format_f64(table.rbad[i])
        );
        for (_, v) in &table.sspbad {
            let _ = write!(out, ",{}", format_f64(v[i]));
        }
        out.push('\n');
    }
    out
}

/// Runs one subcommand. Returns the written files and a one-line summary.
pub fn run(command: &Command) -> Result<(Vec<PathBuf>, String)> {
    let kind = command.kind();
    let cfg = CliConfig::resolve(command.options())?;
    let default_dir = match kind {
        CommandKind::Generate => "scenario",
        _ => ".",
    };
    let dir = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_dir));

    // compute everything before touching the output directory
    let (files, summary) = match kind {
        CommandKind::Generate => generate(&cfg)?,
        CommandKind::Detect => detect(&cfg)?,
        CommandKind::Sweep => sweep(&cfg)?,
        CommandKind::Variances => variances(&cfg)?,
    };

    let mut out = OutputSet::new(&dir)?;
    for (name, contents) in &files {
        out.write(name, contents)?;
    }
    out.write(ECHO_FILE, &cfg.echo(kind))?;
    Ok((out.commit(), summary))
}

type Files = Vec<(&'static str, String)>;

fn generate(cfg: &CliConfig) -> Result<(Files, String)> {
    let s = assemble_scenario(&cfg.scenario())?;
    let anomalous = s.labels.iter().filter(|&&l| l).count();
    let summary = format!(
        "generated {}x{} traffic, {} of {} snapshots anomalous",
        s.y.rows(),
        s.y.cols(),
        anomalous,
        s.labels.len()
    );
    let files = vec![
        ("Y.csv", matrix_to_csv(&s.y)),
        ("R.csv", matrix_to_csv(&s.routing)),
        ("X.csv", matrix_to_csv(&s.flows)),
        ("A.csv", matrix_to_csv(&s.anomalies)),
        ("V.csv", matrix_to_csv(&s.noise)),
        ("labels.csv", labels_to_csv(&s.labels)),
    ];
    Ok((files, summary))
}

// traffic and labels from `input` (directory or file) and `labels`
fn load_input(cfg: &CliConfig) -> Result<(Matrix, Option<Vec<bool>>)> {
    let Some(input) = &cfg.input else {
        return Err(Error::invalid("--input is required"));
    };
    let (y_path, dir_labels) = if input.is_dir() {
        let labels = input.join("labels.csv");
        (input.join("Y.csv"), labels.exists().then_some(labels))
    } else {
        (input.clone(), None)
    };
    let y = read_matrix_csv(&y_path)?;
    let labels = match cfg.labels.as_deref().or(dir_labels.as_deref()) {
        Some(p) => Some(read_labels_for(p, y.cols())?),
        None => None,
    };
    Ok((y, labels))
}

fn read_labels_for(path: &Path, t: usize) -> Result<Vec<bool>> {
    let labels = read_labels(path)?;
    if labels.len() != t {
        return Err(Error::invalid(format!(
            "{}: {} labels for {t} snapshots",
            path.display(),
            labels.len()
        )));
    }
    Ok(labels)
}

fn detect(cfg: &CliConfig) -> Result<(Files, String)> {
    let (y, labels) = load_input(cfg)?;
    let det = cfg.detector(trial_seed(cfg.master_seed, 0));
    let report = FittedDetector::fit(&y, &det)?.detect_at(&y, cfg.rank, cfg.beta)?;
    let mut summary = format!(
        "{} rank {}: {} of {} snapshots flagged, Q = {}",
        cfg.method,
        cfg.rank,
        report.flag_count(),
        report.flags.len(),
        report.q_beta()
    );
    if let Some(l) = &labels {
        let c = score(&report, l)?;
        let _ = write!(
            summary,
            ", detection rate {:.4} (tp {}, fp {}, fn {})",
            detection_rate(&c),
            c.tp,
            c.fp,
            c.fn_
        );
    }
    Ok((
        vec![("report.csv", report_csv(&report, labels.as_deref()))],
        summary,
    ))
}

fn sweep(cfg: &CliConfig) -> Result<(Files, String)> {
    let result = sweep_rank(&cfg.sweep())?;
    let summary = format!("{} rows over {} trials", result.rows.len(), cfg.trials);
    Ok((
        vec![
            ("sweep.csv", sweep_csv(&result)),
            ("sweep_mean.csv", sweep_mean_csv(&result, cfg.trials)),
        ],
        summary,
    ))
}

fn variances(cfg: &CliConfig) -> Result<(Files, String)> {
    let y = if cfg.input.is_some() {
        load_input(cfg)?.0
    } else {
        assemble_scenario(&cfg.scenario())?.y
    };
    let seed = detector_seed(trial_seed(cfg.master_seed, 0));
    let table = variance_compare(&y, cfg.rank, cfg.power_exponent, &cfg.ensembles, seed)?;
    let mut summary = format!(
        "max relative deviation over the top {}: rbad {:.4}",
        table.top, table.rbad_max_rel_dev
    );
    for ((kind, _), dev) in table.sspbad.iter().zip(&table.sspbad_max_rel_dev) {
        let _ = write!(summary, ", sspbad {kind} {dev:.4}");
    }
    Ok((vec![("variances.csv", variances_csv(&table))], summary))
}
