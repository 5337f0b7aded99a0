//! Simulation, bit extraction and randomness certification for photon-pair
//! detection experiments.
//!
//! The crate is organised as a pipeline:
//!
//! 1. [`source_sim`] produces binned detection series for two detector
//!    channels and their coincidence channel.
//! 2. [`extract`] turns detection timestamps into candidate random bits from
//!    the intervals between successive detections.
//! 3. [`borel`] checks bit sequences against the Borel normality bound and
//!    [`nist`] runs a statistical test battery over many sequences.
//! 4. [`report`] wires the stages together and emits reproducible artifacts.

pub mod bits;
pub mod borel;
pub mod error;
pub mod extract;
pub mod fixtures;
pub mod io;
pub mod nist;
pub mod report;
pub mod source_sim;
pub mod stats;

pub use bits::BitSequence;
pub use error::{Error, Result};
