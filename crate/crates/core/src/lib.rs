//! Momentum-accelerated proximal gradient with parameter restart (APG-restart)
//! for composite problems `min F(x) = f(x) + g(x)` where `f` is smooth and
//! possibly nonconvex and `g` is convex and possibly nonsmooth.
//!
//! The crate is organised bottom-up:
//!
//! - [`numkit`]: dense vectors, CSR matrices and the few kernels everything uses.
//! - [`prox`]: separable convex regularizers, proximal map, gradient mapping.
//! - [`objectives`]: smooth losses with gradients and Lipschitz bounds.
//! - [`restart`]: online restart predicates.
//! - [`solver`]: the APG-restart iteration and baseline solvers.
//! - [`diagnostics`]: invariant verification, path length and rate fits.
//! - [`dataio`]: LIBSVM parsing, synthetic generators and bundled fixtures.
//! - [`par`]: data-parallel fan-out with a sequential fallback.

pub mod dataio;
pub mod diagnostics;
mod error;
pub mod numkit;
pub mod objectives;
pub mod par;
pub mod prox;
pub mod restart;
pub mod solver;

pub use error::{Error, Result};
pub use numkit::{DenseVector, SparseMatrixCsr};
pub use objectives::{ObjectiveKind, SmoothObjective};
pub use prox::Regularizer;
pub use restart::{RestartObservation, RestartScheme};
pub use solver::{BaselineKind, SolverConfig, SolverTrace, StepsizeMode};
