//! Linear models for differential abundance analysis of compositional
//! count data.
//!
//! The pipeline is:
//!
//! 1. resolve zeros and apply the centered log-ratio (CLR) transform
//!    ([`preprocess`]),
//! 2. regress every taxon's CLR values on the shared design, either by
//!    ordinary least squares ([`ols`]) or a random-intercept mixed model
//!    ([`lmm`]),
//! 3. remove the compositional bias, estimated as the kernel-density mode of
//!    the scaled coefficients ([`bias`]),
//! 4. studentize, compute t-based p-values and control the FDR with
//!    Benjamini-Hochberg ([`inference`]).
//!
//! [`pipeline`] wires the steps together and [`simulate`] reproduces the
//! synthetic evaluation protocol.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature only adds
//! thread-parallel loops; numeric results are identical either way.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bias;
pub mod data;
mod error;
pub mod inference;
pub mod lmm;
pub mod math;
pub mod matrix;
pub mod ols;
mod par;
pub mod pipeline;
pub mod preprocess;
pub mod simulate;
pub mod special;

pub use bias::{BiasEstimate, Bandwidth, KdeConfig};
pub use data::{CountTable, DesignMatrix, DesignSpec, MetadataTable, Variable, VariableKind};
pub use error::{Error, Result};
pub use inference::{LindaResult, RunMetadata, TaxonResult};
pub use pipeline::{LindaConfig, Method};
pub use preprocess::{ClrMatrix, PositiveAbundanceMatrix, ZeroHandling, ZeroStrategy};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
