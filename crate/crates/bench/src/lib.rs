//! Data handling and benchmark harness around [`ecsdbn_core`]: KEEL file
//! parsing, scaling and stratified folds, the parallel run grid, CSV records,
//! aggregation and statistical comparison.

pub mod aggregate;
pub mod bundle;
pub mod catalog;
pub mod compare;
pub mod config;
mod error;
pub mod keel;
pub mod record;
pub mod runner;
pub mod split;

pub use error::{BenchError, Result};
