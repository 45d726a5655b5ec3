//! Scaled dot-product attention and its compressed variants.
//!
//! Four interchangeable paths produce an `n x d_head` attention output
//! from an `n x d` input:
//!
//! - [`vanilla_attention`]: the exact baseline,
//!   `softmax(Q Kᵀ / sqrt(d_head)) V`, which materializes the full
//!   `n x n` weight matrix;
//! - [`efficient_dct_attention`]: compresses the sequence axis first
//!   (`X_bar = D_bar X`), attends among the `n_bar` retained modes, and
//!   expands the result, so the weight matrix is `n_bar x n_bar`;
//! - [`naive_dct_attention`]: projects Q, K, V at full length and
//!   compresses them afterwards. Algebraically identical to the
//!   efficient path (the projections commute with the transform), it
//!   exists as an independently-coded witness of that identity;
//! - [`ideal_dct_attention`]: runs exact attention, then roundtrips the
//!   weight matrix itself through the truncated transform. This is the
//!   reconstruction oracle: it carries only the truncation error of the
//!   weights, none of the compressed paths' softmax reordering, and it
//!   costs more than the baseline, so it is for evaluation only.
//!
//! The gap between the efficient path and the oracle isolates the error
//! made by applying softmax in the compressed domain; the gap between
//! the oracle and the baseline isolates plain truncation loss.

use crate::dct::{dct2_forward, dct2_inverse, dct_forward, dct_inverse, shared_plan, DctPlan};
use crate::error::{Error, Result};
use crate::numerics::{
    hstack, matmul, matmul_nt, matmul_tn, softmax_rows_in_place, Matrix, Rng,
};

/// Projection weights for one attention head.
#[derive(Debug, Clone)]
pub struct AttentionParams {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
}

/// Uniform Xavier/Glorot draw: `+-sqrt(6 / (fan_in + fan_out))`.
fn xavier(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-limit, limit))
}

impl AttentionParams {
    /// Fresh head weights mapping model width `d` to head width `d_head`.
    pub fn init(rng: &mut Rng, d: usize, d_head: usize) -> AttentionParams {
        AttentionParams {
            w_q: xavier(rng, d, d_head),
            w_k: xavier(rng, d, d_head),
            w_v: xavier(rng, d, d_head),
        }
    }

    pub fn d_head(&self) -> usize {
        self.w_q.cols()
    }
}

/// Weights for a full multi-head layer: per-head projections plus the
/// output projection applied to the concatenated heads.
#[derive(Debug, Clone)]
pub struct MultiHeadParams {
    pub heads: Vec<AttentionParams>,
    pub w_o: Matrix,
}

impl MultiHeadParams {
    pub fn init(rng: &mut Rng, d: usize, heads: usize) -> Result<MultiHeadParams> {
        if heads == 0 || !d.is_multiple_of(heads) {
            return Err(Error::invalid(
                "MultiHeadParams",
                format!("model width {d} is not divisible into {heads} heads"),
            ));
        }
        let d_head = d / heads;
        let heads = (0..heads)
            .map(|_| AttentionParams::init(rng, d, d_head))
            .collect();
        Ok(MultiHeadParams {
            heads,
            w_o: xavier(rng, d, d),
        })
    }

    pub fn d_head(&self) -> usize {
        self.heads[0].d_head()
    }
}

/// Which attention path a layer runs, with the retained length for the
/// compressed ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttentionKind {
    Vanilla,
    DctEfficient { n_bar: usize },
    DctIdeal { n_bar: usize },
    DctNaive { n_bar: usize },
}

impl AttentionKind {
    pub fn n_bar(&self) -> Option<usize> {
        match *self {
            AttentionKind::Vanilla => None,
            AttentionKind::DctEfficient { n_bar }
            | AttentionKind::DctIdeal { n_bar }
            | AttentionKind::DctNaive { n_bar } => Some(n_bar),
        }
    }
}

/// `Q = X W_q`, `K = X W_k`, `V = X W_v`.
pub fn project_qkv(x: &Matrix, p: &AttentionParams) -> Result<(Matrix, Matrix, Matrix)> {
    let q = matmul(x, &p.w_q)?;
    let k = matmul(x, &p.w_k)?;
    let v = matmul(x, &p.w_v)?;
    Ok((q, k, v))
}

/// Row-stochastic attention weights `softmax(Q Kᵀ / sqrt(d_q))`.
///
/// The scores are scaled and softmaxed in the buffer the product is
/// written to; nothing larger than the returned matrix is allocated.
pub fn attention_weights(q: &Matrix, k: &Matrix) -> Result<Matrix> {
    if q.cols() != k.cols() {
        return Err(Error::shape_mismatch("attention_weights", q.shape(), k.shape()));
    }
    if q.cols() == 0 {
        return Err(Error::invalid("attention_weights", "query width must be at least 1"));
    }
    let mut scores = matmul_nt(q, k)?;
    scores.scale_in_place(1.0 / (q.cols() as f64).sqrt());
    softmax_rows_in_place(&mut scores)?;
    Ok(scores)
}

/// Exact scaled dot-product attention, `softmax(Q Kᵀ / sqrt(d_q)) V`.
pub fn vanilla_attention(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<Matrix> {
    if k.rows() != v.rows() {
        return Err(Error::shape_mismatch("vanilla_attention", k.shape(), v.shape()));
    }
    let weights = attention_weights(q, k)?;
    matmul(&weights, v)
}

/// Attention among compressed projections: the core the two compressed
/// paths share once `Q`, `K`, `V` live in the transform domain.
fn compressed_attention_core(
    q_bar: &Matrix,
    k_bar: &Matrix,
    v_bar: &Matrix,
    plan: &DctPlan,
) -> Result<Matrix> {
    let weights = attention_weights(q_bar, k_bar)?;
    let attended = matmul(&weights, v_bar)?;
    dct_inverse(plan, &attended)
}

/// Compressed attention in projection-then-transform order: `Q`, `K`,
/// `V` are computed at full length and each is truncated with the plan.
///
/// Costs `O(n * n_bar)` per projected column and never materializes an
/// `n x n` matrix, but transforms three matrices where
/// [`efficient_dct_attention`] transforms one.
pub fn naive_dct_attention(x: &Matrix, p: &AttentionParams, plan: &DctPlan) -> Result<Matrix> {
    let (q, k, v) = project_qkv(x, p)?;
    let q_bar = dct_forward(plan, &q)?;
    let k_bar = dct_forward(plan, &k)?;
    let v_bar = dct_forward(plan, &v)?;
    compressed_attention_core(&q_bar, &k_bar, &v_bar, plan)
}

/// Compressed attention in transform-then-projection order: the input is
/// truncated once and the projections run at compressed length.
///
/// Equals [`naive_dct_attention`] up to rounding because the linear
/// projections commute with the row transform; this ordering just does
/// strictly less work.
pub fn efficient_dct_attention(x: &Matrix, p: &AttentionParams, plan: &DctPlan) -> Result<Matrix> {
    let (q_bar, k_bar, v_bar) = project_qkv(&dct_forward(plan, x)?, p)?;
    compressed_attention_core(&q_bar, &k_bar, &v_bar, plan)
}

/// Reconstruction oracle: exact attention whose weight matrix is
/// roundtripped through the truncated transform.
///
/// Computes `E = softmax(Q Kᵀ / sqrt(d_q))`, compresses it to
/// `E_bar = D_bar E D_barᵀ`, reconstructs
/// `E_tilde = D_barᵀ E_bar D_bar`, and returns `E_tilde V`. At
/// `n_bar = n` the roundtrip is exact and the output matches
/// [`vanilla_attention`]. This path is quadratic in `n` and exists to
/// attribute error, not to save anything.
pub fn ideal_dct_attention(x: &Matrix, p: &AttentionParams, plan: &DctPlan) -> Result<Matrix> {
    let (q, k, v) = project_qkv(x, p)?;
    let e = attention_weights(&q, &k)?;
    let e_tilde = dct2_inverse(plan, &dct2_forward(plan, &e)?)?;
    matmul(&e_tilde, &v)
}

/// Multi-head attention: per-head outputs concatenated and projected by
/// `W_o`, with every head running the selected path.
///
/// For the efficient path the input is compressed once and shared by all
/// heads, which is what makes the compressed transform cost independent
/// of the head count.
pub fn multi_head(x: &Matrix, p: &MultiHeadParams, kind: AttentionKind) -> Result<Matrix> {
    if p.heads.is_empty() {
        return Err(Error::invalid("multi_head", "at least one head required"));
    }
    if x.cols() != p.heads[0].w_q.rows() {
        return Err(Error::shape_mismatch(
            "multi_head",
            x.shape(),
            p.heads[0].w_q.shape(),
        ));
    }
    let outs: Vec<Matrix> = match kind {
        AttentionKind::Vanilla => {
            let mut outs = Vec::with_capacity(p.heads.len());
            for head in &p.heads {
                let (q, k, v) = project_qkv(x, head)?;
                outs.push(vanilla_attention(&q, &k, &v)?);
            }
            outs
        }
        AttentionKind::DctEfficient { n_bar } => {
            let plan = shared_plan(x.rows(), n_bar)?;
            let x_bar = dct_forward(&plan, x)?;
            let mut outs = Vec::with_capacity(p.heads.len());
            for head in &p.heads {
                let (q_bar, k_bar, v_bar) = project_qkv(&x_bar, head)?;
                outs.push(compressed_attention_core(&q_bar, &k_bar, &v_bar, &plan)?);
            }
            outs
        }
        AttentionKind::DctNaive { n_bar } => {
            let plan = shared_plan(x.rows(), n_bar)?;
            let mut outs = Vec::with_capacity(p.heads.len());
            for head in &p.heads {
                outs.push(naive_dct_attention(x, head, &plan)?);
            }
            outs
        }
        AttentionKind::DctIdeal { n_bar } => {
            let plan = shared_plan(x.rows(), n_bar)?;
            let mut outs = Vec::with_capacity(p.heads.len());
            for head in &p.heads {
                outs.push(ideal_dct_attention(x, head, &plan)?);
            }
            outs
        }
    };
    let concat = hstack(&outs)?;
    matmul(&concat, &p.w_o)
}

/// Vector-Jacobian product of [`vanilla_attention`] with respect to `Q`,
/// `K`, and `V`.
///
/// Given the upstream cotangent `U` (same shape as the output), returns
/// `(dQ, dK, dV)`. With `W = softmax(Q Kᵀ s)`, `s = 1/sqrt(d_q)`:
///
/// ```text
/// dV = Wᵀ U
/// dW = U Vᵀ
/// dS[i][j] = W[i][j] * (dW[i][j] - sum_k dW[i][k] W[i][k])
/// dQ = s * dS K,   dK = s * dSᵀ Q
/// ```
pub fn vanilla_attention_vjp(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    upstream: &Matrix,
) -> Result<(Matrix, Matrix, Matrix)> {
    if k.rows() != v.rows() {
        return Err(Error::shape_mismatch("vanilla_attention_vjp", k.shape(), v.shape()));
    }
    if upstream.shape() != (q.rows(), v.cols()) {
        return Err(Error::shape_mismatch(
            "vanilla_attention_vjp",
            (q.rows(), v.cols()),
            upstream.shape(),
        ));
    }
    let s = 1.0 / (q.cols() as f64).sqrt();
    let w = attention_weights(q, k)?;
    let dv = matmul_tn(&w, upstream)?;
    let mut dw = matmul_nt(upstream, v)?;
    // Softmax pulls each row's cotangent back through its own Jacobian.
    for i in 0..dw.rows() {
        let wi = w.row(i);
        let dot: f64 = wi.iter().zip(dw.row(i)).map(|(a, b)| a * b).sum();
        for (dwij, wij) in dw.row_mut(i).iter_mut().zip(wi) {
            *dwij = wij * (*dwij - dot);
        }
    }
    let mut dq = matmul(&dw, k)?;
    dq.scale_in_place(s);
    let mut dk = matmul_tn(&dw, q)?;
    dk.scale_in_place(s);
    Ok((dq, dk, dv))
}
