//! Cognitive gap-acceptance prediction.

pub mod baselines;
pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod fitting;
pub mod metrics;
pub mod model;
pub mod prediction;
pub mod scenario;

pub use error::{Error, Result};
