//! Synthetic link-traffic scenarios: `Y = R(X + A) + V`.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::random::{gen_bernoulli, gen_gaussian, SeedSpec};

// child-stream tags for the scenario components
const STREAM_FLOW_LEFT: u8 = 0;
const STREAM_FLOW_RIGHT: u8 = 1;
const STREAM_ROUTING: u8 = 2;
const STREAM_ANOMALIES: u8 = 3;
const STREAM_NOISE: u8 = 4;

/// Anomaly count at the reference density: `round(0.001·m·t)`.
pub fn default_anomaly_count(m: usize, t: usize) -> usize {
    (0.001 * (m * t) as f64).round() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Link count.
    pub m: usize,
    /// OD-flow count.
    pub n: usize,
    /// Snapshot count.
    pub t: usize,
    pub r_true: usize,
    pub routing_density: f64,
    pub anomaly_count: usize,
    pub noise_variance: f64,
    pub seed: SeedSpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            m: 120,
            n: 240,
            t: 640,
            r_true: 24,
            routing_density: 0.05,
            anomaly_count: default_anomaly_count(120, 640),
            noise_variance: 0.1,
            seed: SeedSpec::new(0, 0),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.t == 0 {
            return Err(Error::invalid("m, n and t must all be positive"));
        }
        if self.r_true > self.n.min(self.t) {
            return Err(Error::invalid(format!(
                "r_true = {} exceeds min(n, t) = {}",
                self.r_true,
                self.n.min(self.t)
            )));
        }
        if !(0.0..=1.0).contains(&self.routing_density) {
            return Err(Error::invalid(format!(
                "routing_density must lie in [0, 1], got {}",
                self.routing_density
            )));
        }
        if self.anomaly_count > self.n * self.t {
            return Err(Error::invalid(format!(
                "anomaly_count = {} exceeds n·t = {}",
                self.anomaly_count,
                self.n * self.t
            )));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::invalid(format!(
                "noise_variance must be nonnegative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }
}

/// A generated scenario with its ground truth.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    /// Link traffic, `m x t`.
    pub y: Matrix,
    /// Routing, `m x n`.
    pub routing: Matrix,
    /// Low-rank OD flows, `n x t`.
    pub flows: Matrix,
    /// Sparse anomalies, `n x t`.
    pub anomalies: Matrix,
    /// Measurement noise, `m x t`.
    pub noise: Matrix,
    /// `labels[j]` is true when snapshot `j` carries at least one anomaly.
    pub labels: Vec<bool>,
}

/// Low-rank flows `X = U·Vᵀ` with `U ~ N(0, 1/n)` (n x r) and `V ~ N(0, 1/t)` (t x r).
pub fn gen_flows(n: usize, t: usize, r_true: usize, seed: SeedSpec) -> Result<Matrix> {
    if r_true > n.min(t) {
        return Err(Error::invalid(format!(
            "r_true = {r_true} exceeds min(n, t) = {}",
            n.min(t)
        )));
    }
    if r_true == 0 {
        return Ok(Matrix::zeros(n, t));
    }
    let u = gen_gaussian(
        n,
        r_true,
        seed.child(STREAM_FLOW_LEFT),
        (1.0 / n as f64).sqrt(),
    )?;
    let v = gen_gaussian(
        t,
        r_true,
        seed.child(STREAM_FLOW_RIGHT),
        (1.0 / t as f64).sqrt(),
    )?;
    u.matmul_tr(&v)
}

/// Exactly `s` entries of an `n x t` matrix set to ±1, positions drawn
/// uniformly without replacement.
pub fn gen_anomalies(n: usize, t: usize, s: usize, seed: SeedSpec) -> Result<(Matrix, Vec<bool>)> {
    if s > n * t {
        return Err(Error::invalid(format!(
            "anomaly count {s} exceeds n·t = {}",
            n * t
        )));
    }
    let mut rng = seed.rng();
    let mut a = Matrix::zeros(n, t);
    let mut labels = vec![false; t];
    for pos in index::sample(&mut rng, n * t, s) {
        let (i, j) = (pos / t, pos % t);
        a[(i, j)] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        labels[j] = true;
    }
    Ok((a, labels))
}

/// Labels derived from an anomaly matrix: true where a column has a nonzero.
pub fn labels_from_anomalies(a: &Matrix) -> Vec<bool> {
    let mut labels = vec![false; a.cols()];
    for i in 0..a.rows() {
        for (j, &v) in a.row(i).iter().enumerate() {
            if v != 0.0 {
                labels[j] = true;
            }
        }
    }
    labels
}

pub fn assemble_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let seed = cfg.seed;
    let flows = gen_flows(cfg.n, cfg.t, cfg.r_true, seed)?;
    let routing = gen_bernoulli(
        cfg.m,
        cfg.n,
        cfg.routing_density,
        seed.child(STREAM_ROUTING),
    )?;
    let (anomalies, labels) = gen_anomalies(
        cfg.n,
        cfg.t,
        cfg.anomaly_count,
        seed.child(STREAM_ANOMALIES),
    )?;
    let noise = if cfg.noise_variance > 0.0 {
        gen_gaussian(
            cfg.m,
            cfg.t,
            seed.child(STREAM_NOISE),
            cfg.noise_variance.sqrt(),
        )?
    } else {
        Matrix::zeros(cfg.m, cfg.t)
    };
    let y = routing.matmul(&flows.add(&anomalies)?)?.add(&noise)?;
    Ok(Scenario {
        config: cfg.clone(),
        y,
        routing,
        flows,
        anomalies,
        noise,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig;

    fn small_cfg() -> ScenarioConfig {
        ScenarioConfig {
            m: 30,
            n: 60,
            t: 80,
            r_true: 5,
            anomaly_count: 10,
            seed: SeedSpec::new(17, 2),
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn reference_anomaly_count() {
        assert_eq!(default_anomaly_count(120, 640), 77);
        assert_eq!(ScenarioConfig::default().anomaly_count, 77);
    }

    #[test]
    fn zero_rank_flows() {
        let x = gen_flows(10, 12, 0, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(x, Matrix::zeros(10, 12));
        assert!(gen_flows(10, 12, 11, SeedSpec::new(1, 0)).is_err());
    }

    #[test]
    fn flows_have_requested_rank() {
        let x = gen_flows(240, 640, 24, SeedSpec::new(5, 0)).unwrap();
        // eigenvalues of X·Xᵀ are squared singular values; the gap is tested
        // on the squares since forming the Gram matrix costs half the digits
        let gram = x.matmul_tr(&x).unwrap();
        let eig = sym_eig(&gram).unwrap();
        let top = eig.eigenvalues[0];
        let rank = eig.eigenvalues.iter().filter(|&&l| l > 1e-10 * top).count();
        assert_eq!(rank, 24);
        assert!(eig.eigenvalues[23] > 1e-4 * top);
    }

    #[test]
    fn flow_energy_matches_monte_carlo() {
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        // independent oracle: Box-Muller factors from a different generator
        fn oracle_energy(n: usize, t: usize, r: usize, seed: u64) -> f64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut normal = |sd: f64| {
                let u1: f64 = 1.0 - rng.random::<f64>();
                let u2: f64 = rng.random();
                sd * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            };
            let u: Vec<f64> = (0..n * r)
                .map(|_| normal((1.0 / n as f64).sqrt()))
                .collect();
            let v: Vec<f64> = (0..t * r)
                .map(|_| normal((1.0 / t as f64).sqrt()))
                .collect();
            let mut e = 0.0;
            for i in 0..n {
                for j in 0..t {
                    let x: f64 = (0..r).map(|k| u[i * r + k] * v[j * r + k]).sum();
                    e += x * x;
                }
            }
            e
        }

        let (n, t, r) = (240, 640, 24);
        let trials = 20;
        let got: f64 = (0..trials)
            .map(|s| {
                gen_flows(n, t, r, SeedSpec::new(s, 0))
                    .unwrap()
                    .frobenius_norm()
                    .powi(2)
            })
            .sum::<f64>()
            / trials as f64;
        let oracle: f64 = (0..trials)
            .map(|s| oracle_energy(n, t, r, 1000 + s))
            .sum::<f64>()
            / trials as f64;
        // both estimate E‖X‖² = r; per-draw sd is about sqrt(2r) scaled, so 20
        // draws pin the mean to a few percent
        assert!(
            (oracle - r as f64).abs() < 0.15 * r as f64,
            "oracle {oracle}"
        );
        assert!(
            (got - oracle).abs() < 0.2 * r as f64,
            "got {got} oracle {oracle}"
        );
    }

    #[test]
    fn anomaly_placement() {
        let (a, labels) = gen_anomalies(240, 640, 0, SeedSpec::new(1, 1)).unwrap();
        assert_eq!(a.max_abs(), 0.0);
        assert!(labels.iter().all(|&l| !l));

        let (a, labels) = gen_anomalies(240, 640, 77, SeedSpec::new(1, 1)).unwrap();
        let nonzero: Vec<f64> = a.as_slice().iter().copied().filter(|&v| v != 0.0).collect();
        assert_eq!(nonzero.len(), 77);
        assert!(nonzero.iter().all(|&v| v.abs() == 1.0));
        let flagged = labels.iter().filter(|&&l| l).count();
        assert!(flagged <= 77);
        assert_eq!(labels, labels_from_anomalies(&a));

        assert!(gen_anomalies(2, 2, 5, SeedSpec::new(1, 1)).is_err());
    }

    #[test]
    fn every_entry_anomalous() {
        let (a, labels) = gen_anomalies(3, 4, 12, SeedSpec::new(3, 3)).unwrap();
        assert!(a.as_slice().iter().all(|&v| v.abs() == 1.0));
        assert!(labels.iter().all(|&l| l));
    }

    #[test]
    fn scenario_reassembles_exactly() {
        let sc = assemble_scenario(&small_cfg()).unwrap();
        let rebuilt = sc
            .routing
            .matmul(&sc.flows.add(&sc.anomalies).unwrap())
            .unwrap()
            .add(&sc.noise)
            .unwrap();
        assert_eq!(rebuilt.sub(&sc.y).unwrap().frobenius_norm(), 0.0);
        assert_eq!(sc.y.shape(), (30, 80));
        assert_eq!(sc.labels, labels_from_anomalies(&sc.anomalies));
    }

    #[test]
    fn noiseless_anomaly_free_is_low_rank() {
        let cfg = ScenarioConfig {
            noise_variance: 0.0,
            anomaly_count: 0,
            ..small_cfg()
        };
        let sc = assemble_scenario(&cfg).unwrap();
        assert_eq!(sc.y, sc.routing.matmul(&sc.flows).unwrap());
        let eig = sym_eig(&sc.y.matmul_tr(&sc.y).unwrap()).unwrap();
        let top = eig.eigenvalues[0];
        assert!(eig.eigenvalues[5..].iter().all(|&l| l.abs() <= 1e-10 * top));
    }

    #[test]
    fn noise_level_does_not_move_other_components() {
        let a = assemble_scenario(&small_cfg()).unwrap();
        let b = assemble_scenario(&ScenarioConfig {
            noise_variance: 0.7,
            ..small_cfg()
        })
        .unwrap();
        assert_eq!(a.flows, b.flows);
        assert_eq!(a.anomalies, b.anomalies);
        assert_eq!(a.routing, b.routing);
        assert_ne!(a.noise, b.noise);
    }

    #[test]
    fn routing_row_degree() {
        let sc = assemble_scenario(&ScenarioConfig {
            seed: SeedSpec::new(99, 0),
            ..ScenarioConfig::default()
        })
        .unwrap();
        assert_eq!(sc.y.shape(), (120, 640));
        // total ones ~ Binomial(m·n, 0.05); mean row degree n·p = 12
        let total: f64 = sc.routing.as_slice().iter().sum();
        let trials = (120 * 240) as f64;
        let mean = trials * 0.05;
        let sd = (trials * 0.05 * 0.95).sqrt();
        assert!((total - mean).abs() <= 4.0 * sd, "{total}");
        for i in 0..120 {
            let deg: f64 = sc.routing.row(i).iter().sum();
            let sd_row = (240.0f64 * 0.05 * 0.95).sqrt();
            assert!(
                (deg - 12.0).abs() <= 4.0 * sd_row + 1.0,
                "row {i} degree {deg}"
            );
        }
    }

    #[test]
    fn single_flip_changes_at_most_one_label() {
        let sc = assemble_scenario(&small_cfg()).unwrap();
        let base = sc.labels.clone();
        for i in 0..sc.anomalies.rows() {
            for j in 0..sc.anomalies.cols() {
                if sc.anomalies[(i, j)] == 0.0 {
                    let mut a = sc.anomalies.clone();
                    a[(i, j)] = 1.0;
                    let flipped = labels_from_anomalies(&a);
                    let changes = flipped.iter().zip(&base).filter(|(x, y)| x != y).count();
                    assert!(changes <= 1);
                }
            }
        }
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            ScenarioConfig {
                r_true: 100,
                ..small_cfg()
            },
            ScenarioConfig {
                routing_density: 1.5,
                ..small_cfg()
            },
            ScenarioConfig {
                anomaly_count: 60 * 80 + 1,
                ..small_cfg()
            },
            ScenarioConfig {
                noise_variance: -1.0,
                ..small_cfg()
            },
            ScenarioConfig {
                m: 0,
                ..small_cfg()
            },
        ];
        for cfg in bad {
            assert!(assemble_scenario(&cfg).is_err(), "{cfg:?}");
        }
    }
}
