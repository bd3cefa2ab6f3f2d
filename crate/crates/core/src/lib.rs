//! Entanglement distribution over homogeneous quantum repeater chains with
//! finite memories.
//!
//! - [`model`]: chain parameters and memory allocations.
//! - [`analytic`]: closed-form rates, memory footprints and delays.
//! - [`ctmc`]: exact Markov-chain solves for small chains.
//! - [`sim`]: event-driven simulation of arbitrary chains.
//! - [`experiment`]: configuration files, sweeps and result tables.

pub mod analytic;
pub mod ctmc;
pub mod error;
pub mod experiment;
pub mod model;
pub mod sim;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
