//! Simulation of the cycle-weighted interchange process on finite graphs.
//!
//! A configuration of timed transpositions ("crosses") on the edges of a
//! graph is weighted by `theta^(number of cycles)` relative to independent
//! rate-1 Poisson processes. The crate provides exact and MCMC samplers, the
//! loop representation, the red/white colouring and twist construction, small
//! exact oracles, and experiment drivers, plus the `interchange` CLI.

pub mod cli;
pub mod colouring;
pub mod error;
pub mod loops;
pub mod oracle;
pub mod process;
pub mod sampler;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use process::{
    compose, cycle_decompose, insert_delta_cycles, sample_crosses, two_point_indicator, Cross,
    CrossConfig, CycleDecomposition, FiniteGraph, Permutation,
};
