//! Quantum Laplacian eigenmaps: spectral node embedding and classification
//! on a classically simulated gate-model quantum computer.
//!
//! The pipeline mirrors its classical counterpart stage by stage:
//!
//! 1. build a graph and its Laplacian ([`graph`]),
//! 2. decompose the Laplacian into a weighted sum of Pauli strings and
//!    optionally truncate small coefficients ([`pauli`]),
//! 3. variationally train a circuit whose statevector encodes a low-dimensional
//!    embedding of every node at once ([`embed`], on top of [`qsim`],
//!    [`ansatz`] and [`optimize`]),
//! 4. train a small variational classifier on the embedded state
//!    ([`classify`]),
//! 5. compare against the exact classical eigenmap pipeline ([`baseline`]).
//!
//! [`harness`] wires the stages into a resumable, file-based experiment
//! pipeline; the `qlemap` binary exposes it as a CLI. Runnable walkthroughs of
//! each stage live in the crate's `examples/` directory.

pub mod ansatz;
pub mod baseline;
pub mod classify;
pub mod embed;
pub mod graph;
pub mod harness;
pub mod optimize;
pub mod pauli;
pub mod qsim;

mod error;

pub use error::{Error, Result};
