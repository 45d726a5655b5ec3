//! A small post-norm transformer encoder.
//!
//! This is the context the attention paths are meant to live in, kept
//! deliberately lean: learned token and absolute position embeddings,
//! then `n_blocks` of
//!
//! ```text
//! y   = LayerNorm(x + MultiHead(x))
//! out = LayerNorm(y + W2 gelu(W1 y + b1) + b2)
//! ```
//!
//! There is no masking, no dropout, and no training loop; the encoder
//! exists so correctness and cost of the attention variants can be
//! judged inside a realistic forward pass rather than in isolation.

use crate::attention::{multi_head, AttentionKind, MultiHeadParams};
use crate::error::{Error, Result};
use crate::numerics::{add, gelu, layer_norm, matmul, Matrix, Rng};

const LN_EPS: f64 = 1e-12;

/// Hyperparameters of the encoder stack.
#[derive(Debug, Clone)]
pub struct EncoderConfig {
    pub n_blocks: usize,
    pub d: usize,
    pub heads: usize,
    pub d_ff: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    pub attention: AttentionKind,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            n_blocks: 4,
            d: 512,
            heads: 8,
            d_ff: 2048,
            max_len: 512,
            vocab_size: 30_522,
            attention: AttentionKind::Vanilla,
            seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.heads == 0 || !self.d.is_multiple_of(self.heads) {
            return Err(Error::invalid(
                "EncoderConfig",
                format!("width {} is not divisible into {} heads", self.d, self.heads),
            ));
        }
        if self.vocab_size == 0 || self.max_len == 0 {
            return Err(Error::invalid(
                "EncoderConfig",
                "vocab_size and max_len must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Weights of one encoder block.
#[derive(Debug, Clone)]
pub struct BlockWeights {
    pub attn: MultiHeadParams,
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub ln1_gamma: Vec<f64>,
    pub ln1_beta: Vec<f64>,
    pub ln2_gamma: Vec<f64>,
    pub ln2_beta: Vec<f64>,
}

/// All learned tensors of the encoder.
#[derive(Debug, Clone)]
pub struct EncoderWeights {
    pub token_embedding: Matrix,
    pub position_embedding: Matrix,
    pub blocks: Vec<BlockWeights>,
}

fn xavier(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-limit, limit))
}

impl EncoderWeights {
    /// Deterministic initialization from `config.seed`: Xavier-uniform
    /// matrices, zero biases, identity layer-norm affine.
    pub fn init(config: &EncoderConfig) -> Result<EncoderWeights> {
        config.validate()?;
        let mut rng = Rng::new(config.seed);
        let token_embedding = xavier(&mut rng, config.vocab_size, config.d);
        let position_embedding = xavier(&mut rng, config.max_len, config.d);
        let blocks = (0..config.n_blocks)
            .map(|_| {
                Ok(BlockWeights {
                    attn: MultiHeadParams::init(&mut rng, config.d, config.heads)?,
                    w1: xavier(&mut rng, config.d, config.d_ff),
                    b1: vec![0.0; config.d_ff],
                    w2: xavier(&mut rng, config.d_ff, config.d),
                    b2: vec![0.0; config.d],
                    ln1_gamma: vec![1.0; config.d],
                    ln1_beta: vec![0.0; config.d],
                    ln2_gamma: vec![1.0; config.d],
                    ln2_beta: vec![0.0; config.d],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EncoderWeights {
            token_embedding,
            position_embedding,
            blocks,
        })
    }
}

/// Token plus position embedding rows for a sequence of token ids.
pub fn embed(token_ids: &[usize], w: &EncoderWeights) -> Result<Matrix> {
    let vocab_size = w.token_embedding.rows();
    let max_len = w.position_embedding.rows();
    if token_ids.len() > max_len {
        return Err(Error::SequenceTooLong {
            len: token_ids.len(),
            max_len,
        });
    }
    let d = w.token_embedding.cols();
    let mut out = Matrix::zeros(token_ids.len(), d);
    for (i, &id) in token_ids.iter().enumerate() {
        if id >= vocab_size {
            return Err(Error::TokenOutOfRange { id, vocab_size });
        }
        let row = out.row_mut(i);
        for (x, (t, p)) in row
            .iter_mut()
            .zip(w.token_embedding.row(id).iter().zip(w.position_embedding.row(i)))
        {
            *x = t + p;
        }
    }
    Ok(out)
}

fn affine(x: &Matrix, w: &Matrix, b: &[f64]) -> Result<Matrix> {
    let mut y = matmul(x, w)?;
    y.add_row_in_place(b)?;
    Ok(y)
}

/// One residual block: attention sublayer, then feed-forward sublayer,
/// each followed by layer norm (post-norm order).
pub fn encoder_block(x: &Matrix, bw: &BlockWeights, kind: AttentionKind) -> Result<Matrix> {
    let attended = multi_head(x, &bw.attn, kind)?;
    let y = layer_norm(&add(x, &attended)?, &bw.ln1_gamma, &bw.ln1_beta, LN_EPS)?;
    let ff = affine(&gelu(&affine(&y, &bw.w1, &bw.b1)?), &bw.w2, &bw.b2)?;
    layer_norm(&add(&y, &ff)?, &bw.ln2_gamma, &bw.ln2_beta, LN_EPS)
}

/// Full forward pass: embedding followed by every block in order.
pub fn encoder_forward(
    token_ids: &[usize],
    w: &EncoderWeights,
    config: &EncoderConfig,
) -> Result<Matrix> {
    config.validate()?;
    let mut x = embed(token_ids, w)?;
    for bw in &w.blocks {
        x = encoder_block(&x, bw, config.attention)?;
    }
    Ok(x)
}
