use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Unbiased sample variance of each row (divisor `cols - 1`).
pub fn row_variance(m: &Matrix) -> Result<Vec<f64>> {
    let t = m.cols();
    if t < 2 {
        return Err(Error::invalid(format!(
            "row variance needs at least 2 columns, got {t}"
        )));
    }
    Ok((0..m.rows())
        .map(|i| {
            let row = m.row(i);
            let mean = row.iter().sum::<f64>() / t as f64;
            row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (t - 1) as f64
        })
        .collect())
}

/// Subtracts each row's mean. Returns the centered matrix and the means.
pub fn center_rows(y: &Matrix) -> (Matrix, Vec<f64>) {
    let t = y.cols();
    let mut centered = y.clone();
    let mut mu = Vec::with_capacity(y.rows());
    for i in 0..y.rows() {
        let row = centered.row_mut(i);
        let mean = if t == 0 {
            0.0
        } else {
            row.iter().sum::<f64>() / t as f64
        };
        row.iter_mut().for_each(|x| *x -= mean);
        mu.push(mean);
    }
    (centered, mu)
}

/// Sample covariance `(1/(t-1))·(Y-μ)(Y-μ)ᵀ` of the rows of `y`.
pub fn row_covariance(y: &Matrix) -> Result<Matrix> {
    let t = y.cols();
    if t < 2 {
        return Err(Error::invalid(format!(
            "covariance needs at least 2 columns, got {t}"
        )));
    }
    let (c, _) = center_rows(y);
    let mut s = c.matmul_tr(&c)?;
    let denom = (t - 1) as f64;
    for i in 0..s.rows() {
        s.row_mut(i).iter_mut().for_each(|x| *x /= denom);
    }
    // exact symmetry
    for i in 0..s.rows() {
        for j in 0..i {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    Ok(s)
}
