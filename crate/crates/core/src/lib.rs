//! Numerical laboratory for strong invariance principles of reverse
//! martingales and uniformly expanding interval maps.
//!
//! The pieces, bottom up:
//! - [`systems`]: maps, invariant densities, observables, ν-quadrature.
//! - [`transfer`]: the transfer operator K (branch sums and Ulam matrices),
//!   decay fits and summability checks.
//! - [`chain`]: the backward Markov chain, reverse-time duality and φ-mixing.
//! - [`martingale`]: the m-function, reverse martingale differences,
//!   coboundaries and truncation blocks.
//! - [`coupling`]: Brownian embedding and Gaussian partner sequences.
//! - [`stats`]: variance, CLT, LIL and rate experiments.
//! - [`runner`]: configs, CSV artifacts, manifests and replay.

// Parameter checks are written !(x > a) so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod coupling;
pub mod error;
pub mod grid;
pub mod martingale;
pub mod numerics;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod systems;
pub mod transfer;

pub use error::{Error, Result};
