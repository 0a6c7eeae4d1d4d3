//! Curriculum learning on image classification datasets.
//!
//! Two families of curricula are provided:
//!
//! * fixed curricula that rank examples by an unsupervised image statistic
//!   (standard deviation, entropy, norms) and expose an exponentially growing
//!   prefix of the ranking ([`scoring`], [`pacing`], [`curriculum`]);
//! * dynamic curricula that re-rank the training set every epoch by how well
//!   each example's gradient points toward a reference optimum ([`dcl`]).
//!
//! Networks are two-layer fully connected ELU classifiers trained with plain
//! SGD ([`nn`]). [`analysis`] holds the diagnostics used to pick and explain
//! curricula, and [`cli`] wires everything into reproducible experiment runs.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod curriculum;
pub mod data;
pub mod dcl;
mod error;
pub mod linalg;
pub mod nn;
pub mod pacing;
pub mod scoring;
pub mod stats;

pub use error::{Error, Result};
