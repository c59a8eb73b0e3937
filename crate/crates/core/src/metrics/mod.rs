//! Explanation metrics between a raw signal and what a model learned about
//! it: structural similarity (DTW), time-frequency similarity (MSE between
//! Ricker scalograms) and rhythm agreement (R-R interval slack).

mod cwt;
mod dtw;
mod peaks;
mod score;
mod slack;
mod summary;

pub use cwt::{cwt, cwt_mse, default_scales, log_scales, ricker, scalogram_mse, Scalogram};
pub use dtw::dtw_distance;
pub use peaks::{detect_r_peaks, PeakConfig, PeakList};
pub use score::{score_dataset, score_sample, write_metric_dump, MetricConfig, MetricTriple};
pub use slack::{slack, slack_from_intervals, SlackValue, SLACK_SENTINEL};
pub use summary::{resample_linear, summarize_features, z_normalize, FeatureSummary};
