//! Causal de-correlation bias mitigation for tabular binary classifiers.
pub mod causal;
pub mod cli;
pub mod data;
pub mod decorrelate;
pub mod error;
pub mod evaluate;
pub mod metrics;
pub mod models;
pub mod optimize;
pub mod report;
pub mod seed;
pub use error::{Error, Result};
