//! Minimal dense linear algebra with exact allocation accounting.
//!
//! Everything downstream (transforms, attention, the encoder, the
//! benchmark harness) is built on [`Matrix`] so that the global
//! [`AllocationCounter`] sees every float the pipeline keeps alive.
//! Arithmetic is plain `f64` throughout; there is no SIMD, threading, or
//! blocking, which keeps measured memory and time directly attributable
//! to the algorithms themselves.

mod alloc;
mod matrix;
mod ops;
mod rng;

pub use alloc::AllocationCounter;
pub use matrix::{add, frob_diff, hstack, max_abs_diff, sub, Matrix};
pub use ops::{gelu, layer_norm, matmul, matmul_nt, matmul_tn, softmax_rows, softmax_rows_in_place};
pub use rng::Rng;
