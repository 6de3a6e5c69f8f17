//! Numerical core for learning frame-level sequence embeddings by position
//! propagation.
//!
//! The crate is `no_std` (it needs `alloc`) and contains no IO. It provides:
//!
//! - exact dynamic time warping with backtracking ([`alignment`]),
//! - soft-DTW with its exact backward recursion ([`softdtw`]),
//! - the similarity distribution, the same-video and propagated priors and the
//!   combined pair objective with analytic gradients ([`objective`]),
//! - a small per-frame encoder with a hand-written backward pass ([`encoder`]),
//! - clip sampling, a synthetic benchmark, the optimizer loop and the
//!   evaluation metrics.
//!
//! Everything is deterministic given explicit seeds. File formats, the CLI and
//! thread pools live in the companion `lrprop` crate.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` style comparisons are how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod alignment;
pub mod checks;
pub mod encoder;
mod error;
pub mod linalg;
pub mod metrics;
pub mod objective;
pub mod optim;
pub mod sampling;
pub mod softdtw;
pub mod synth;
pub mod trainer;

pub(crate) mod num;

pub use error::{Error, Result};
pub use linalg::Matrix;

/// Per-frame embeddings of one clip or video, one row per frame.
pub type EmbeddingSequence = Matrix;
