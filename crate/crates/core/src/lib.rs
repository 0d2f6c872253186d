//! Counterfactual explanations for tabular binary classifiers.
//!
//! A swarm searches a box around the query point, restricted to the features
//! with the highest information value, and k-means over the converged swarm
//! yields a diverse set of counterfactuals.

pub mod active_set;
pub mod baseline_gs;
pub mod data;
pub mod error;
pub mod mdpso;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod select;

pub use error::{Error, Result, SchemaError};
