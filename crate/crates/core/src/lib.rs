//! Chemotaxis on networks: kinetic, half-moment, Cattaneo and Keller-Segel
//! models on one-dimensional edges joined at nodes, discretized with
//! asymptotic-preserving relaxation schemes.

pub mod cli;
pub mod coupling;
pub mod engine;
pub mod error;
pub mod graph;
pub mod hyperbolic;
pub mod models;
pub mod scenarios;

pub use error::{Error, Result};
