use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Householder QR of a square or tall matrix.
///
/// Returns the thin factorization `b = q·r` with `q` of shape `rows x cols`
/// (orthonormal columns) and `r` upper triangular `cols x cols`. The diagonal
/// of `r` is nonnegative. Rank-deficient input is accepted; a column that is
/// already zero below the diagonal yields an identity reflector.
pub fn householder_qr(b: &Matrix) -> Result<(Matrix, Matrix)> {
    let (m, n) = b.shape();
    if m < n {
        return Err(Error::invalid(format!(
            "householder_qr needs rows >= cols, got {m}x{n}"
        )));
    }

    // work column-major: each column of `a` is contiguous
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| b.column(j)).collect();
    // unit reflector vectors, stored from index k downward
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);

    for k in 0..n {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vnorm);

        a[k][k] = alpha;
        a[k][k + 1..].iter_mut().for_each(|x| *x = 0.0);
        for col in a.iter_mut().skip(k + 1) {
            let tail = &mut col[k..];
            let s = 2.0 * v.iter().zip(tail.iter()).map(|(x, y)| x * y).sum::<f64>();
            tail.iter_mut().zip(&v).for_each(|(t, x)| *t -= s * x);
        }
        reflectors.push(Some(v));
    }

    let mut r = Matrix::zeros(n, n);
    for (j, col) in a.iter().enumerate() {
        for i in 0..=j {
            r[(i, j)] = col[i];
        }
    }

    // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I
    let mut q_cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();
    for (k, v) in reflectors.iter().enumerate().rev() {
        let Some(v) = v else { continue };
        for col in q_cols.iter_mut() {
            let tail = &mut col[k..];
            let s = 2.0 * v.iter().zip(tail.iter()).map(|(x, y)| x * y).sum::<f64>();
            if s != 0.0 {
                tail.iter_mut().zip(v).for_each(|(t, x)| *t -= s * x);
            }
        }
    }

    // nonnegative diagonal of r
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
            q_cols[k].iter_mut().for_each(|x| *x = -*x);
        }
    }

    let mut q = Matrix::zeros(m, n);
    for (j, col) in q_cols.iter().enumerate() {
        q.set_column(j, col);
    }
    Ok((q, r))
}
