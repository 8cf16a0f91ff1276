//! Adaptive sparse multi-wavelet surrogates for models with random inputs.
//!
//! A model with uniformly distributed inputs on a box is approximated leaf by
//! leaf: on every axis-aligned sub-box a local expansion in tensor Legendre
//! scaling functions plus per-direction Alpert multi-wavelets is recovered from
//! a handful of random model evaluations by ℓ1 minimization. Leaves whose
//! directional wavelet energy is large relative to their variance are bisected
//! and refitted until the refinement criterion stops firing.
//!
//! Module map:
//!
//! * [`mwbasis`]: 1D scaling functions and multi-wavelets on `[0, 1]`.
//! * [`tensor`]: index sets, sub-partitions, basis rows and local moments.
//! * [`csolve`]: measurement systems and the ℓ1 recovery solvers.
//! * [`adapt`]: sampling, leaf fitting and the adaptive splitting loop.
//! * [`models`]: the benchmark models and the model registry.
//! * [`bench`]: Monte Carlo reference, error metrics, sweeps and file output.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod bench;
pub mod csolve;
pub mod error;
pub mod models;
pub mod mwbasis;
pub mod quadrature;
pub mod tensor;

mod rng;

pub use error::{Error, Result};
