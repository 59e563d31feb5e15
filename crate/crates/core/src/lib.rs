//! Spectral trust-region update transforms for matrix-shaped parameters.
//!
//! The central transform rescales a Frobenius-normalized update by the RMS
//! of its entrywise hyperbolic cosine, which keeps the spectral norm below
//! one in linear time. Around it sit Newton–Schulz and exact-polar
//! baselines, momentum optimizers, a small MLP harness that logs
//! alignment/energy diagnostics, and randomized batteries that check
//! the trust-region properties against a Jacobi SVD oracle.

pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod nn;
pub mod optim;
pub mod parallel;
pub mod rng;
pub mod run;
pub mod transforms;
pub mod verify;

#[cfg(test)]
mod proptests;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use optim::{OptimizerConfig, OptimizerKind, ParamState};
pub use parallel::Execution;
pub use run::{RunConfig, RunLog};
pub use transforms::{NsCoeffs, TransformKind, TransformReport};
