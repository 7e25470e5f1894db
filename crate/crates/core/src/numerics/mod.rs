//! Numerical building blocks shared by the modelling modules.

pub mod quad;
pub mod rng;
pub mod roots;
pub mod stats;
