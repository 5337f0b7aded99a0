//! A subset of the NIST SP800-22 statistical test battery.
//!
//! Implemented: Frequency, Block Frequency, Cumulative Sums (both
//! directions), Runs, Longest Run, FFT and Approximate Entropy. The Rank and
//! template-matching tests are listed in reports as not implemented.

pub mod battery;
pub mod special;
pub mod suite;

pub use battery::{run_battery, BatteryConfig, BatteryReport, BatteryRow, RowStatus};
pub use suite::{
    approx_entropy_test, block_frequency_test, cusum_test, dft_magnitudes, frequency_test,
    longest_run_class_probabilities, longest_run_test, runs_test, spectral_test, Direction,
    TestKind, TestResult,
};
