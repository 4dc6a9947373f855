//! Systems of N identical spin-ℓ bosons with random two-body interactions.
//!
//! The crate builds M-scheme bases and Hamiltonians, solves for ground
//! states, samples random ensembles and runs the downstream statistics:
//! ground-state spin probabilities, extreme-value energy fits, the
//! effective dimensionality of ground-state wavefunctions and cluster
//! structure. The `dboson` module holds the closed-form ℓ = 2 solution.

pub mod analysis;
pub mod angular;
pub mod combinatorics;
pub mod dense;
pub mod dboson;
pub mod ensemble;
pub mod error;
pub mod fock;
pub mod lanczos;
pub mod operators;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
