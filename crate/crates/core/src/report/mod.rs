//! End-to-end pipeline: acquisition (simulated or from file), extraction,
//! Borel and battery analyses, and artifact emission.

mod artifacts;
mod config;
mod pipeline;

pub use artifacts::{interval_histogram, write_artifacts, Artifacts, HISTOGRAM_BINS};
pub use config::{
    parse_pairs, read_pairs, AnalysisConfig, ExtractionConfig, OutputConfig, PipelineConfig,
    SourceSpec, DEFAULT_BATTERY_SPLIT, DEFAULT_LENGTH, DEFAULT_SEED, DEFAULT_SEQUENCES,
};
pub use pipeline::{
    extract_bits, run_pipeline, simulate_bits, simulate_intervals, span_intervals, Extraction,
    IntervalCollector, PipelineOutcome, SimulatedBits,
};
