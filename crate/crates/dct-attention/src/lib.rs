//! Self-attention with a truncated orthonormal cosine transform.
//!
//! The quadratic cost of dot-product attention comes from the `n x n`
//! score matrix it builds over a length-`n` sequence. This crate
//! compresses the sequence axis with a truncated orthonormal DCT-II
//! before attention runs and expands the result afterwards, so the score
//! matrix shrinks to `n_bar x n_bar` where `n_bar` is the number of
//! retained cosine modes. Alongside the compressed path it carries the
//! exact baseline, an equivalent uncompressed formulation for testing,
//! and a reconstruction oracle that isolates where the approximation
//! error comes from.
//!
//! The crate splits into:
//!
//! - [`numerics`]: dense `f64` matrices, a seedable generator, and an
//!   allocation counter that measures memory in float elements;
//! - [`dct`]: the transform, its truncation, and cached plans;
//! - [`attention`]: the four attention paths and the gradient of the
//!   baseline;
//! - [`transformer`]: a small post-norm encoder that exercises attention
//!   in context;
//! - [`bench`]: scaling and error measurements plus their CSV formats.
//!
//! The `dct-attention` binary exposes the harness as `selftest`,
//! `bench`, and `error` subcommands.

pub mod attention;
pub mod bench;
pub mod dct;
mod error;
pub mod numerics;
pub mod selftest;
pub mod transformer;

pub use error::{Error, Result};

/// Compiles and runs every code block in the guide under `book/`, so the
/// prose stays in lockstep with the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $path))]
            mod $name {}
        };
    }

    chapter!(introduction, "introduction.md");
    chapter!(orthonormal_transform, "orthonormal-transform.md");
    chapter!(attention, "attention.md");
    chapter!(compressed_attention, "compressed-attention.md");
    chapter!(error_anatomy, "error-anatomy.md");
    chapter!(encoder, "encoder.md");
    chapter!(measurement, "measurement.md");
}
