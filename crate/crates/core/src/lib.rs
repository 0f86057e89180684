//! Concepts embedded as linear subspaces of `R^d`.
//!
//! A concept is parameterized by a span matrix `X` (d×n). Its representation
//! is the Tikhonov-regularized projector `X (XᵀX + Λ)⁻¹ Xᵀ`, whose trace acts
//! as a continuous effective dimension. On top of that representation this
//! crate provides:
//!
//! - [`linalg`]: dense row-major matrices, Cholesky solves, symmetric
//!   eigendecomposition and pseudoinverse.
//! - [`autodiff`]: a reverse-mode tape over the matrix primitives the losses use.
//! - [`projector`]: hard and soft projectors, overlap, effective dimension and
//!   the normalized inclusion score.
//! - [`lattice`]: meet/join/complement and a boolean query language.
//! - [`taxonomy`]: DAG ingestion, transitive closure, splits and negative sampling.
//! - [`training`]: embedding tables, InfoNCE/margin losses, the Beta entailment
//!   head, Adam, and the reconstruction / link-prediction loops.
//! - [`metrics`]: ranking metrics, Spearman correlation, calibrated F1 and
//!   dimension-vs-generality reports.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, IO and the
//! command-line driver live in the `subspace-cli` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub(crate) mod math;

pub mod autodiff;
pub mod lattice;
pub mod linalg;
pub mod metrics;
pub mod projector;
pub mod taxonomy;
pub mod training;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use projector::{Projector, Regularizer, SpanMatrix};
