//! Feedback-based quantum optimization (FALQON) parameter curves for weighted
//! MaxCut on cubic graphs, with a teacher–student graph-network surrogate that
//! predicts those curves without simulating the feedback loop.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: cubic instances, canonical labeling, enumeration and sampling
//! - [`hamiltonian`]: the diagonal problem Hamiltonian, spectral scalars
//! - [`simulator`]: statevector kernels for one Trotterized layer
//! - [`schedules`]: the feedback loop, linear annealing and curve replay
//! - [`metrics`]: approximation ratio and per-layer deviation statistics
//! - [`tape`], [`model`]: reverse-mode autodiff and the surrogate networks
//! - [`training`]: curve losses, Adam and the two-phase training protocol
//! - [`dataset`]: the reference-curve corpus, splits and standardization

pub mod dataset;
pub mod error;
pub mod fmt;
pub mod graph;
pub mod hamiltonian;
pub mod lanczos;
pub mod metrics;
pub mod model;
pub mod params;
pub mod schedules;
pub mod simulator;
pub mod tape;
pub mod tensor;
pub mod training;

pub use error::{Error, ErrorKind, Result};
