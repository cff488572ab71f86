//! Experiment harness: configuration, orchestration, persisted records,
//! summary tables and SVG plots.

pub mod config;
pub mod records;
pub mod runner;
pub mod stats;
pub mod svg;

/// Overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "ANAGRAM_OUTPUT_DIR";
/// Worker-pool size for concurrent runs.
pub const THREADS_ENV: &str = "ANAGRAM_THREADS";
