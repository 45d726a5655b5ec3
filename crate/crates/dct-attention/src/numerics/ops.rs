use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;

/// `a · b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(Error::shape_mismatch("matmul", a.shape(), b.shape()));
    }
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        let arow = a.row(i);
        let crow = out.row_mut(i);
        for (p, &aip) in arow.iter().enumerate().take(k) {
            let brow = b.row(p);
            for j in 0..m {
                crow[j] += aip * brow[j];
            }
        }
    }
    Ok(out)
}

/// `a · bᵀ` without materializing the transpose.
///
/// Both operands are walked along contiguous rows, so this is also the
/// cache-friendly product for score matrices.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::shape_mismatch("matmul_nt", a.shape(), b.shape()));
    }
    let (n, m) = (a.rows(), b.rows());
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        let arow = a.row(i);
        let crow = out.row_mut(i);
        for (j, cij) in crow.iter_mut().enumerate().take(m) {
            let brow = b.row(j);
            *cij = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
        }
    }
    Ok(out)
}

/// `aᵀ · b` without materializing the transpose.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::shape_mismatch("matmul_tn", a.shape(), b.shape()));
    }
    let (n, m) = (a.cols(), b.cols());
    let mut out = Matrix::zeros(n, m);
    for p in 0..a.rows() {
        let arow = a.row(p);
        let brow = b.row(p);
        for (i, &api) in arow.iter().enumerate().take(n) {
            let crow = out.row_mut(i);
            for j in 0..m {
                crow[j] += api * brow[j];
            }
        }
    }
    Ok(out)
}

/// Row-wise softmax, overwriting `a`.
///
/// The row maximum is subtracted before exponentiation so magnitudes up
/// to around 1e3 stay in range. Performing the update in place matters
/// for more than speed: the attention paths are sized by their largest
/// transient matrix, and a scratch copy here would double it.
pub fn softmax_rows_in_place(a: &mut Matrix) -> Result<()> {
    if let Some((row, col, value)) = a.first_non_finite() {
        return Err(Error::NonFinite {
            op: "softmax_rows",
            row,
            col,
            value,
        });
    }
    for i in 0..a.rows() {
        let row = a.row_mut(i);
        if row.is_empty() {
            continue;
        }
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
    Ok(())
}

/// Row-wise softmax of `a`.
pub fn softmax_rows(a: &Matrix) -> Result<Matrix> {
    let mut out = a.clone();
    softmax_rows_in_place(&mut out)?;
    Ok(out)
}

/// Row-wise layer normalization followed by the affine map
/// `gamma * x + beta`.
///
/// Each row is centered and divided by `sqrt(var + eps)` where `var` is
/// the population variance of the row.
pub fn layer_norm(a: &Matrix, gamma: &[f64], beta: &[f64], eps: f64) -> Result<Matrix> {
    if gamma.len() != a.cols() || beta.len() != a.cols() {
        return Err(Error::invalid(
            "layer_norm",
            format!(
                "gamma has {} and beta has {} entries for {} columns",
                gamma.len(),
                beta.len(),
                a.cols()
            ),
        ));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::invalid("layer_norm", format!("eps={eps} must be positive")));
    }
    let mut out = a.clone();
    let cols = a.cols();
    if cols == 0 {
        return Ok(out);
    }
    for i in 0..a.rows() {
        let row = out.row_mut(i);
        let mean = row.iter().sum::<f64>() / cols as f64;
        let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / cols as f64;
        let inv = 1.0 / (var + eps).sqrt();
        for (x, (g, b)) in row.iter_mut().zip(gamma.iter().zip(beta)) {
            *x = g * (*x - mean) * inv + b;
        }
    }
    Ok(out)
}

/// Exact Gaussian error linear unit, `x * Phi(x)` with `Phi` the standard
/// normal CDF evaluated through `erf`. The tanh shortcut is deliberately
/// not used; it drifts from the exact curve by up to about 1e-3.
pub fn gelu(a: &Matrix) -> Matrix {
    let mut out = a.clone();
    for x in out.data_mut() {
        *x = gelu_scalar(*x);
    }
    out
}

pub(crate) fn gelu_scalar(x: f64) -> f64 {
    x * 0.5 * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2))
}
