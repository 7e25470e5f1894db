//! Randomly charged polymer on a transient lattice.
//!
//! The crate covers the lazy nearest-neighbour walk on `Z^d` (`d >= 3`) and its
//! lattice constants, symmetric charge laws with their log-Laplace transforms,
//! Legendre-Fenchel machinery for the upper-tail rate, the polymer energy
//! observables, and a set of tail-probability experiments (exact enumeration,
//! naive and importance-sampled Monte Carlo, bound-shape checks).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charge_models;
pub mod error;
pub mod lattice_walk;
pub mod numerics;
pub mod polymer_energy;
pub mod rate_function;
pub mod tail_lab;

pub use error::{Error, Result};
