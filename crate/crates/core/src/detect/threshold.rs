use crate::error::{Error, Result};
use crate::normal::normal_quantile;

/// Residual energy at or below this fraction of the total is treated as zero.
pub const DEGENERATE_RESIDUAL_FRACTION: f64 = 1e-12;

/// Q-statistic threshold on the squared prediction error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QThreshold {
    pub q_beta: f64,
    /// Power sums `θ_i = Σ_{j>r} λ_jⁱ` for `i = 1, 2, 3`.
    pub theta: [f64; 3],
    pub h0: f64,
    /// Standard normal `1 - β` quantile.
    pub c_beta: f64,
    pub beta: f64,
}

/// Jackson–Mudholkar threshold from a descending variance spectrum, treating
/// entries `r..` as the residual subspace.
///
/// ```text
/// Q = θ₁ [ c·sqrt(2θ₂h₀²)/θ₁ + 1 + θ₂h₀(h₀-1)/θ₁² ]^(1/h₀),  h₀ = 1 - 2θ₁θ₃/(3θ₂²)
/// ```
pub fn q_threshold(variances: &[f64], r: usize, beta: f64) -> Result<QThreshold> {
    let m = variances.len();
    if r == 0 || r >= m {
        return Err(Error::invalid(format!(
            "rank must lie in [1, {}], got {r}",
            m.saturating_sub(1)
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }

    let mut theta = [0.0; 3];
    for &lambda in &variances[r..] {
        theta[0] += lambda;
        theta[1] += lambda * lambda;
        theta[2] += lambda * lambda * lambda;
    }
    let [t1, t2, t3] = theta;
    let total: f64 = variances.iter().map(|l| l.abs()).sum();
    if t2 == 0.0 || t1 <= DEGENERATE_RESIDUAL_FRACTION * total {
        return Err(Error::DegenerateSpectrum);
    }

    let h0 = 1.0 - 2.0 * t1 * t3 / (3.0 * t2 * t2);
    if h0.abs() < 1e-12 {
        return Err(Error::ThresholdUndefined(format!("h0 = {h0:e} is zero")));
    }
    if variances[r..].iter().all(|&l| l >= 0.0) {
        // Cauchy–Schwarz: θ₂² ≤ θ₁θ₃, so h₀ ≤ 1/3
        debug_assert!(h0 <= 1.0 / 3.0 + 1e-9, "h0 = {h0}");
    }

    let c_beta = normal_quantile(1.0 - beta)?;
    let base = c_beta * (2.0 * t2 * h0 * h0).sqrt() / t1 + 1.0 + t2 * h0 * (h0 - 1.0) / (t1 * t1);
    let exponent = 1.0 / h0;
    let scaled = if base > 0.0 {
        base.powf(exponent)
    } else {
        let k = exponent.round();
        if (exponent - k).abs() > 1e-9 {
            return Err(Error::ThresholdUndefined(format!(
                "base {base:e} is not positive and 1/h0 = {exponent} is not an integer"
            )));
        }
        base.powi(k as i32)
    };

    Ok(QThreshold {
        q_beta: t1 * scaled,
        theta,
        h0,
        c_beta,
        beta,
    })
}
