use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{center_rows, householder_qr, row_covariance, row_variance, sym_eig, Matrix};
use crate::random::{gen_gaussian, EnsembleKind, SeedSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Pca,
    Rbad,
    Sspbad,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Pca, Method::Rbad, Method::Sspbad];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Rbad => "rbad",
            Method::Sspbad => "sspbad",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pca" => Ok(Method::Pca),
            "rbad" => Ok(Method::Rbad),
            "sspbad" => Ok(Method::Sspbad),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// Orthonormal basis split into normal (first `rank` columns) and residual
/// subspaces, with the variance each basis vector captures.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceModel {
    /// `m x m`, orthonormal columns.
    pub basis: Matrix,
    /// Captured variance per basis column, non-increasing.
    pub variances: Vec<f64>,
    pub rank: usize,
    pub method: Method,
    /// When set, `mean` is subtracted from traffic before projecting.
    pub centered: bool,
    pub mean: Vec<f64>,
    pub ensemble: Option<EnsembleKind>,
    pub power_exponent: Option<u32>,
}

impl SubspaceModel {
    pub fn links(&self) -> usize {
        self.basis.rows()
    }

    /// Same basis with a different normal-subspace rank.
    pub fn with_rank(&self, rank: usize) -> Result<SubspaceModel> {
        check_rank(rank, self.links())?;
        Ok(SubspaceModel {
            rank,
            ..self.clone()
        })
    }

    /// `P`: the first `rank` basis columns.
    pub fn normal_basis(&self) -> Matrix {
        self.basis.leading_columns(self.rank)
    }
}

fn check_rank(r: usize, m: usize) -> Result<()> {
    if r == 0 || r >= m {
        return Err(Error::invalid(format!(
            "rank must lie in [1, {}], got {r}",
            m.saturating_sub(1)
        )));
    }
    Ok(())
}

fn check_traffic(y: &Matrix) -> Result<()> {
    if y.cols() < 2 {
        return Err(Error::invalid(format!(
            "traffic needs at least 2 snapshots, got {}",
            y.cols()
        )));
    }
    Ok(())
}

/// PCA model: eigenvectors of the sample covariance of the centered traffic.
pub fn build_pca_model(y: &Matrix, r: usize) -> Result<SubspaceModel> {
    check_traffic(y)?;
    check_rank(r, y.rows())?;
    let (_, mean) = center_rows(y);
    let eig = sym_eig(&row_covariance(y)?)?;
    // roundoff can leave a PSD spectrum slightly negative
    let variances = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    Ok(SubspaceModel {
        basis: eig.eigenvectors,
        variances,
        rank: r,
        method: Method::Pca,
        centered: true,
        mean,
        ensemble: None,
        power_exponent: None,
    })
}

/// Randomized range-finder model: `B = (YYᵀ)^q·Y·Φ` with Gaussian `Φ`
/// (`t x m`), orthonormalized by QR.
///
/// With `centered` the row means are removed from `Y` first; otherwise the
/// raw traffic is used.
pub fn build_rbad_model(
    y: &Matrix,
    r: usize,
    q_exp: u32,
    seed: SeedSpec,
    centered: bool,
) -> Result<SubspaceModel> {
    check_traffic(y)?;
    check_rank(r, y.rows())?;
    let (work, mean) = working_traffic(y, centered);
    let (m, t) = work.shape();

    let phi = gen_gaussian(t, m, seed, 1.0)?;
    let mut sketch = work.matmul(&phi)?;
    for _ in 0..q_exp {
        sketch = work.matmul(&work.tr_matmul(&sketch)?)?;
    }
    let (q, _) = householder_qr(&sketch)?;
    let (basis, variances) = order_by_captured_variance(q, &work)?;

    Ok(SubspaceModel {
        basis,
        variances,
        rank: r,
        method: Method::Rbad,
        centered,
        mean,
        ensemble: None,
        power_exponent: Some(q_exp),
    })
}

/// One candidate model per ensemble: `T₁ = Yᵀ·T₂`, `T₂ ← Y·T₁`, QR of `T₂`.
///
/// Candidates come back in the order of `kinds`. Each ensemble draws from
/// its own child stream of `seed`, so a kind's candidate does not depend on
/// which other kinds are requested.
pub fn build_sspbad_candidates(
    y: &Matrix,
    r: usize,
    kinds: &[EnsembleKind],
    seed: SeedSpec,
    centered: bool,
) -> Result<Vec<SubspaceModel>> {
    build_sspbad_draws(y, r, kinds, 1, seed, centered)
}

/// Like [`build_sspbad_candidates`] with `draws` independent matrices per
/// ensemble, ordered by ensemble and then by draw. The first draw of each
/// ensemble is the one [`build_sspbad_candidates`] uses.
pub fn build_sspbad_draws(
    y: &Matrix,
    r: usize,
    kinds: &[EnsembleKind],
    draws: usize,
    seed: SeedSpec,
    centered: bool,
) -> Result<Vec<SubspaceModel>> {
    check_traffic(y)?;
    check_rank(r, y.rows())?;
    if kinds.is_empty() {
        return Err(Error::invalid("at least one ensemble is required"));
    }
    if draws == 0 || draws > MAX_DRAWS {
        return Err(Error::invalid(format!(
            "draws per ensemble must lie in [1, {MAX_DRAWS}], got {draws}"
        )));
    }
    let (work, mean) = working_traffic(y, centered);
    let m = work.rows();

    kinds
        .iter()
        .flat_map(|&kind| (0..draws).map(move |d| (kind, d)))
        .map(|(kind, d)| {
            let base = seed.child(kind.position() as u8);
            let stream = if d == 0 { base } else { base.child(d as u8) };
            let t2 = kind.generate(m, m, stream);
            let t1 = work.tr_matmul(&t2)?;
            let t2 = work.matmul(&t1)?;
            let (q, _) = householder_qr(&t2)?;
            let (basis, variances) = order_by_captured_variance(q, &work)?;
            Ok(SubspaceModel {
                basis,
                variances,
                rank: r,
                method: Method::Sspbad,
                centered,
                mean: mean.clone(),
                ensemble: Some(kind),
                power_exponent: None,
            })
        })
        .collect()
}

/// Largest supported number of SSPBAD draws per ensemble.
pub const MAX_DRAWS: usize = 256;

fn working_traffic(y: &Matrix, centered: bool) -> (Matrix, Vec<f64>) {
    if centered {
        center_rows(y)
    } else {
        (y.clone(), vec![0.0; y.rows()])
    }
}

// Λ_Q = Var{(Qᵀ·Y)ᵀ}, then columns of Q permuted to descending variance
// (stable, so ties keep QR order).
fn order_by_captured_variance(q: Matrix, y: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let captured = row_variance(&q.tr_matmul(y)?)?;
    let mut order: Vec<usize> = (0..captured.len()).collect();
    order.sort_by(|&a, &b| captured[b].total_cmp(&captured[a]));
    let variances = order.iter().map(|&k| captured[k]).collect();
    Ok((q.permute_columns(&order), variances))
}

/// Splits traffic into its normal-subspace part and residual:
/// `ŷ = P·Pᵀ·y (+ mean)`, `ỹ = (I - P·Pᵀ)(y - mean)`.
pub fn project(model: &SubspaceModel, y: &Matrix) -> Result<(Matrix, Matrix)> {
    if y.rows() != model.links() {
        return Err(Error::DimensionMismatch {
            op: "project",
            left: model.basis.shape(),
            right: y.shape(),
        });
    }
    let mut work = y.clone();
    if model.centered {
        for (i, &mu) in model.mean.iter().enumerate() {
            work.row_mut(i).iter_mut().for_each(|x| *x -= mu);
        }
    }
    let p = model.normal_basis();
    let normal = p.matmul(&p.tr_matmul(&work)?)?;
    let residual = work.sub(&normal)?;
    let mut y_hat = normal;
    if model.centered {
        for (i, &mu) in model.mean.iter().enumerate() {
            y_hat.row_mut(i).iter_mut().for_each(|x| *x += mu);
        }
    }
    Ok((y_hat, residual))
}
