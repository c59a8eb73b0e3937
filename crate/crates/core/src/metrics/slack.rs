use serde::{Deserialize, Serialize};

use super::peaks::{detect_r_peaks, PeakConfig};
use super::summary::{z_normalize, FeatureSummary};
use crate::error::{Error, Result};
use crate::signal::Signal;

/// Value reported when the signal itself shows no R-R interval.
pub const SLACK_SENTINEL: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackValue {
    pub value: f64,
    /// The signal had no R-R interval and `value` is [`SLACK_SENTINEL`].
    pub undefined: bool,
}

/// R-R interval slack, in percent:
///
/// `100 * (sum_{i<n} |ori_i - pred_i| / ori_i + |#ori - #pred| / #ori)`
///
/// where `n = min(#ori, #pred)` and intervals are paired by position from
/// the start of the window.
pub fn slack_from_intervals(ori: &[usize], pred: &[usize]) -> SlackValue {
    if ori.is_empty() {
        return SlackValue {
            value: SLACK_SENTINEL,
            undefined: true,
        };
    }
    let interval_term: f64 = ori
        .iter()
        .zip(pred)
        .map(|(&o, &p)| o.abs_diff(p) as f64 / o as f64)
        .sum();
    let count_term = ori.len().abs_diff(pred.len()) as f64 / ori.len() as f64;
    SlackValue {
        value: (interval_term + count_term) * 100.0,
        undefined: false,
    }
}

/// Slack between the peaks of the (z-normalized) signal and those of the
/// feature summary curve.
pub fn slack(signal: &Signal, summary: &FeatureSummary, peaks: &PeakConfig) -> Result<SlackValue> {
    slack_raw(&signal.samples, &summary.curve, peaks)
}

pub(crate) fn slack_raw(signal: &[f64], curve: &[f64], peaks: &PeakConfig) -> Result<SlackValue> {
    if signal.len() != curve.len() {
        return Err(Error::Shape(format!(
            "signal has {} samples, summary {}",
            signal.len(),
            curve.len()
        )));
    }
    let ori = detect_r_peaks(&z_normalize(signal), peaks);
    let pred = detect_r_peaks(curve, peaks);
    Ok(slack_from_intervals(&ori.rr_intervals, &pred.rr_intervals))
}
