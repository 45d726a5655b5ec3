//! Orthonormal DCT-II along the row (sequence) axis, with truncation.
//!
//! The transform is carried by the matrix `D` with entries
//!
//! ```text
//! D[k][m] = alpha_k * cos(pi * (2m + 1) * k / (2n))
//! alpha_0 = sqrt(1/n),  alpha_k = sqrt(2/n) for k > 0
//! ```
//!
//! `D` is orthogonal, so its inverse is its transpose. Keeping only the
//! first `n_bar` rows gives the truncated analysis map `D_bar` used for
//! compression: `D_barᵀ · D_bar` is then an orthogonal projection onto
//! the lowest `n_bar` cosine modes, which is where smooth signals keep
//! almost all of their energy.
//!
//! A [`DctPlan`] bundles `D_bar` for one `(n, n_bar)` pair. Plans are
//! immutable and can be shared freely; [`shared_plan`] hands out cached
//! copies so repeated layers of equal shape pay for one table.

mod fft;

pub use fft::{makhoul_dct, makhoul_idct};

use crate::error::{Error, Result};
use crate::numerics::{matmul, matmul_nt, matmul_tn, Matrix};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

/// The first `n_bar` rows of the size-`n` orthonormal DCT-II matrix.
pub fn dct_matrix(n: usize, n_bar: usize) -> Result<Matrix> {
    check_sizes("dct_matrix", n, n_bar)?;
    let a0 = (1.0 / n as f64).sqrt();
    let ak = (2.0 / n as f64).sqrt();
    Ok(Matrix::from_fn(n_bar, n, |k, m| {
        let alpha = if k == 0 { a0 } else { ak };
        alpha * (PI * (2 * m + 1) as f64 * k as f64 / (2.0 * n as f64)).cos()
    }))
}

fn check_sizes(op: &'static str, n: usize, n_bar: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid(op, "transform length n must be at least 1"));
    }
    if n_bar == 0 || n_bar > n {
        return Err(Error::invalid(
            op,
            format!("retained length n_bar={n_bar} must satisfy 1 <= n_bar <= n (n={n})"),
        ));
    }
    Ok(())
}

/// Retained length for a truncation fraction: `max(1, round(scale * n))`.
pub fn n_bar_from_scale(n: usize, scale: f64) -> usize {
    ((scale * n as f64).round() as usize).clamp(1, n)
}

/// Precomputed truncated transform for one `(n, n_bar)` pair.
#[derive(Debug)]
pub struct DctPlan {
    n: usize,
    n_bar: usize,
    d_bar: Matrix,
    fast_path: bool,
}

impl DctPlan {
    pub fn new(n: usize, n_bar: usize) -> Result<DctPlan> {
        check_sizes("DctPlan", n, n_bar)?;
        Ok(DctPlan {
            n,
            n_bar,
            d_bar: dct_matrix(n, n_bar)?,
            fast_path: n.is_power_of_two(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_bar(&self) -> usize {
        self.n_bar
    }

    /// The `n_bar x n` analysis matrix.
    pub fn d_bar(&self) -> &Matrix {
        &self.d_bar
    }

    /// Whether length-`n` columns take the FFT route.
    pub fn fast_path(&self) -> bool {
        self.fast_path
    }
}

/// Analysis transform of every column of `x`: `D_bar · x`.
///
/// `x` is `n x d`; the result is `n_bar x d`. Power-of-two lengths run
/// through the FFT; other lengths multiply by the cosine matrix. Both
/// routes agree to roughly machine precision.
pub fn dct_forward(plan: &DctPlan, x: &Matrix) -> Result<Matrix> {
    if x.rows() != plan.n {
        return Err(Error::shape_mismatch(
            "dct_forward",
            (plan.n_bar, plan.n),
            x.shape(),
        ));
    }
    if !plan.fast_path {
        return matmul(&plan.d_bar, x);
    }
    let d = x.cols();
    let mut out = Matrix::zeros(plan.n_bar, d);
    let mut col = vec![0.0; plan.n];
    for j in 0..d {
        for (i, c) in col.iter_mut().enumerate() {
            *c = x.at(i, j);
        }
        let coeffs = makhoul_dct(&col)?;
        for (k, &v) in coeffs.iter().take(plan.n_bar).enumerate() {
            out.set(k, j, v);
        }
    }
    Ok(out)
}

/// Synthesis transform of every column: `D_barᵀ · x_bar`.
///
/// Expands `n_bar x d` coefficients back to `n x d` samples. With
/// `n_bar == n` this inverts [`dct_forward`] exactly (up to rounding);
/// with `n_bar < n` the composition is the orthogonal projection onto
/// the retained modes.
pub fn dct_inverse(plan: &DctPlan, x_bar: &Matrix) -> Result<Matrix> {
    if x_bar.rows() != plan.n_bar {
        return Err(Error::shape_mismatch(
            "dct_inverse",
            (plan.n_bar, plan.n),
            x_bar.shape(),
        ));
    }
    if !plan.fast_path {
        return matmul_tn(&plan.d_bar, x_bar);
    }
    let (n_bar, d) = x_bar.shape();
    let mut out = Matrix::zeros(plan.n, d);
    // Truncated coefficients are an n-vector padded with zeros.
    let mut coeffs = vec![0.0; plan.n];
    for j in 0..d {
        for (k, c) in coeffs.iter_mut().take(n_bar).enumerate() {
            *c = x_bar.at(k, j);
        }
        let col = makhoul_idct(&coeffs)?;
        for (i, &v) in col.iter().enumerate() {
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Two-dimensional analysis transform of a square matrix:
/// `D_bar · e · D_barᵀ`.
pub fn dct2_forward(plan: &DctPlan, e: &Matrix) -> Result<Matrix> {
    if e.shape() != (plan.n, plan.n) {
        return Err(Error::shape_mismatch(
            "dct2_forward",
            (plan.n, plan.n),
            e.shape(),
        ));
    }
    let rows = matmul(&plan.d_bar, e)?;
    matmul_nt(&rows, &plan.d_bar)
}

/// Two-dimensional synthesis transform: `D_barᵀ · e_bar · D_bar`.
pub fn dct2_inverse(plan: &DctPlan, e_bar: &Matrix) -> Result<Matrix> {
    if e_bar.shape() != (plan.n_bar, plan.n_bar) {
        return Err(Error::shape_mismatch(
            "dct2_inverse",
            (plan.n_bar, plan.n_bar),
            e_bar.shape(),
        ));
    }
    let rows = matmul_tn(&plan.d_bar, e_bar)?;
    matmul(&rows, &plan.d_bar)
}

type PlanCache = RwLock<HashMap<(usize, usize), Arc<DctPlan>>>;

fn plan_cache() -> &'static PlanCache {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Cached plan for `(n, n_bar)`, built on first request.
///
/// Attention layers of the same shape all resolve to the same table, no
/// matter how many heads or blocks ask for it.
pub fn shared_plan(n: usize, n_bar: usize) -> Result<Arc<DctPlan>> {
    if let Some(plan) = plan_cache().read().expect("plan cache poisoned").get(&(n, n_bar)) {
        return Ok(Arc::clone(plan));
    }
    let plan = Arc::new(DctPlan::new(n, n_bar)?);
    let mut cache = plan_cache().write().expect("plan cache poisoned");
    Ok(Arc::clone(cache.entry((n, n_bar)).or_insert(plan)))
}

/// Drop all cached plans. Memory measurements that want to observe plan
/// construction call this first.
pub fn clear_plan_cache() {
    plan_cache().write().expect("plan cache poisoned").clear();
}
