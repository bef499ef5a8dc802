//! Seeded generators for the random test matrices.
//!
//! Every generator draws from a ChaCha stream selected by a [`SeedSpec`]:
//! the master seed keys the cipher and the stream index picks one of its
//! 2⁶⁴ independent streams. Nothing here holds shared RNG state.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, stream_index: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_index,
        }
    }

    /// Child stream for sub-component `tag`. Distinct tags of one parent
    /// always give distinct children (the mix is a bijection on u64); other
    /// collisions are as unlikely as between two random 64-bit values.
    pub const fn child(self, tag: u8) -> Self {
        let input = self
            .stream_index
            .wrapping_mul(257)
            .wrapping_add(tag as u64 + 1);
        SeedSpec {
            master_seed: self.master_seed,
            stream_index: splitmix64(input),
        }
    }

    pub fn rng(self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

// SplitMix64 finalizer
const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The four random-matrix families used for the projection bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnsembleKind {
    Gaussian,
    BernoulliHalf,
    MarkovColumnStochastic,
    Rademacher,
}

impl EnsembleKind {
    /// Fixed order; also the tie-break order when selecting candidates.
    pub const ALL: [EnsembleKind; 4] = [
        EnsembleKind::Gaussian,
        EnsembleKind::BernoulliHalf,
        EnsembleKind::MarkovColumnStochastic,
        EnsembleKind::Rademacher,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::BernoulliHalf => "bernoulli-half",
            EnsembleKind::MarkovColumnStochastic => "markov-column-stochastic",
            EnsembleKind::Rademacher => "rademacher",
        }
    }

    pub fn position(self) -> usize {
        EnsembleKind::ALL.iter().position(|&k| k == self).unwrap()
    }

    pub fn generate(self, rows: usize, cols: usize, seed: SeedSpec) -> Matrix {
        match self {
            EnsembleKind::Gaussian => {
                gen_gaussian(rows, cols, seed, 1.0).expect("unit stddev is valid")
            }
            EnsembleKind::BernoulliHalf => {
                gen_bernoulli(rows, cols, 0.5, seed).expect("p = 0.5 is valid")
            }
            EnsembleKind::MarkovColumnStochastic => gen_markov(rows, cols, seed),
            EnsembleKind::Rademacher => gen_rademacher(rows, cols, seed),
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(EnsembleKind::Gaussian),
            "bernoulli-half" | "bernoulli" => Ok(EnsembleKind::BernoulliHalf),
            "markov-column-stochastic" | "markov" => Ok(EnsembleKind::MarkovColumnStochastic),
            "rademacher" => Ok(EnsembleKind::Rademacher),
            other => Err(Error::invalid(format!("unknown ensemble '{other}'"))),
        }
    }
}

/// i.i.d. `N(0, stddev²)` entries.
pub fn gen_gaussian(rows: usize, cols: usize, seed: SeedSpec, stddev: f64) -> Result<Matrix> {
    if !(stddev > 0.0 && stddev.is_finite()) {
        return Err(Error::invalid(format!(
            "stddev must be positive, got {stddev}"
        )));
    }
    let mut rng = seed.rng();
    Ok(Matrix::from_fn(rows, cols, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        stddev * z
    }))
}

/// i.i.d. 0/1 entries, each 1 with probability `p`.
pub fn gen_bernoulli(rows: usize, cols: usize, p: f64, seed: SeedSpec) -> Result<Matrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "probability must lie in [0, 1], got {p}"
        )));
    }
    let mut rng = seed.rng();
    Ok(Matrix::from_fn(rows, cols, |_, _| {
        if rng.random_bool(p) {
            1.0
        } else {
            0.0
        }
    }))
}

/// Nonnegative entries with every column summing to one: i.i.d. uniforms,
/// then each column divided by its sum.
pub fn gen_markov(rows: usize, cols: usize, seed: SeedSpec) -> Matrix {
    let mut rng = seed.rng();
    // (0, 1] so a column sum can never be zero
    let mut m = Matrix::from_fn(rows, cols, |_, _| 1.0 - rng.random::<f64>());
    for j in 0..cols {
        let col = m.column(j);
        let total: f64 = col.iter().sum();
        let normalized: Vec<f64> = col.iter().map(|x| x / total).collect();
        m.set_column(j, &normalized);
    }
    m
}

/// i.i.d. entries from {-1, +1}.
pub fn gen_rademacher(rows: usize, cols: usize, seed: SeedSpec) -> Matrix {
    let mut rng = seed.rng();
    Matrix::from_fn(
        rows,
        cols,
        |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 },
    )
}
