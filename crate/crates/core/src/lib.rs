//! Core-set selection for 1D CNN signal classifiers driven by explanation
//! metrics (DTW, wavelet MSE and R-R interval slack) computed between each
//! input signal and the model's own feature maps.

pub mod cnn;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod selection;
pub mod signal;

mod rng;

pub use error::{Error, Result};
pub use rng::SeedPlan;
