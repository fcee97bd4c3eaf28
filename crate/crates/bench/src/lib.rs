//! Noise-sweep benchmark harness for the `worm-core` classifiers.
//!
//! A run generates synthetic line data for every configured noise level and trial, fits
//! each classifier on the training split, scores it on the test split and aggregates
//! accuracy across trials into a [`report::BenchmarkReport`].

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::{ClassifierSpec, ExperimentConfig};
pub use error::BenchError;
pub use experiment::{generate_datasets, run_experiment};
pub use report::{emit_plot_data, emit_report, BenchmarkReport, ReportFormat, ReportRow};
