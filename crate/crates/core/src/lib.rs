#![cfg_attr(not(test), no_std)]

//! Core of a Monte Carlo laboratory for central limit theorems on
//! row-wise exchangeable triangular arrays.
//!
//! Everything here is a pure function of its inputs and a random stream, so
//! the crate only needs [`alloc`]. IO, config parsing, CSV output and the
//! thread pool live in the `exchlab` companion crate.
//!
//! Layout:
//!
//! - [`generators`]: exchangeable row families and their hypothesis profiles.
//! - [`statistics`]: the full-sum and centered partial-sum statistics plus the
//!   sign-flip construction they are related by.
//! - [`checks`]: Monte Carlo estimates of the three limit conditions and of
//!   marginal / joint sign symmetry.
//! - [`gof`]: normal CDF and quantile, Kolmogorov-Smirnov and Wasserstein-1.
//! - [`engine`]: deterministic per-cell and per-experiment execution.
//!
//! Randomness comes from [`stream::derive_stream`], a counter-style
//! derivation keyed by `(master seed, m, replicate)`, so results never depend
//! on evaluation order or thread count.

extern crate alloc;

pub mod checks;
pub mod engine;
pub mod error;
pub mod exec;
pub mod generators;
pub mod gof;
pub mod statistics;
pub mod stream;
pub mod sum;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use stream::{derive_stream, SeedInfo, Stream};
