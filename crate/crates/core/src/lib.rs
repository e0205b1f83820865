//! Finite-alphabet evaluation of key-leakage-storage-cost bounds for secret-key
//! agreement from a hidden identifier source, where the decoder's measurement
//! channel is selected by a cost-constrained action sequence.
//!
//! The crate is organised bottom-up:
//!
//! - [`prob`]: joint probability tensors and (conditional) mutual information in bits.
//! - [`channel`]: conditional channels, binary symmetric channels, cascades and costs.
//! - [`system`]: the seven-variable joint `(U, V, A, X~, X, Y, Z)` and the binary example.
//! - [`bounds`]: inner and outer bounds for the generated- and chosen-secret models.
//! - [`ordering`]: physical degradedness certificates and a less-noisy falsifier.
//! - [`sweep`]: parameter sweeps, cost/key-rate frontiers and gain summaries.
//! - [`mc`]: Monte Carlo plug-in estimates used to cross-check the exact values.
//! - [`cli`]: the `keyregion` command line.

pub mod bounds;
pub mod channel;
pub mod cli;
pub mod error;
pub mod mc;
pub mod ordering;
pub mod prob;
pub mod sweep;
pub mod system;

pub use error::{Error, Result};
