//! Benchmark harness for error loss networks: synthetic data, noise models,
//! metrics, cross-validated grid search and the experiment pipelines.

// `!(x > 0)` is the NaN-rejecting form of the parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod labels;
pub mod metrics;

pub use error::{BenchError, Result};
