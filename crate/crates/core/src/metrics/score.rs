use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cwt::{cwt_mse_raw, default_scales};
use super::dtw::dtw_distance;
use super::peaks::PeakConfig;
use super::slack::slack_raw;
use super::summary::{summarize_features, z_normalize};
use crate::cnn::Model;
use crate::error::{Error, Result};
use crate::signal::{Dataset, Signal};

/// Which layer to summarize and how to compute each metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    /// Conv layer index; `None` picks the last convolution before pooling.
    pub layer: Option<usize>,
    /// Wavelet scales; `None` uses [`default_scales`] for the signal length.
    pub scales: Option<Vec<f64>>,
    /// Heartbeats expected per window, used to size the peak distance.
    pub beats_per_window: usize,
    pub peak_k: f64,
    /// Minimum peak distance as a fraction of the expected beat length.
    pub peak_distance_fraction: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            layer: None,
            scales: None,
            beats_per_window: 5,
            peak_k: 1.5,
            peak_distance_fraction: 0.2,
        }
    }
}

impl MetricConfig {
    pub fn resolve_layer(&self, model: &Model) -> Result<usize> {
        match self.layer {
            Some(l) => Ok(l),
            None => model.spec().last_conv_layer().ok_or(Error::Layer(0)),
        }
    }

    pub fn resolve_scales(&self, len: usize) -> Vec<f64> {
        self.scales.clone().unwrap_or_else(|| default_scales(len))
    }

    pub fn peak_config(&self, len: usize) -> PeakConfig {
        let beat = len as f64 / self.beats_per_window.max(1) as f64;
        PeakConfig {
            k: self.peak_k,
            min_distance: (self.peak_distance_fraction * beat).round().max(1.0) as usize,
        }
    }
}

/// The three explanation metrics of one sample against one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub sample_id: String,
    pub dtw: f64,
    pub mse: f64,
    pub slack: f64,
    /// No R-R interval was found in the signal; `slack` holds the sentinel.
    pub slack_undefined: bool,
}

/// DTW, wavelet MSE and slack of `signal` against the summary of `layer`.
pub fn score_sample(
    model: &Model,
    signal: &Signal,
    layer: usize,
    scales: &[f64],
    peaks: &PeakConfig,
) -> Result<MetricTriple> {
    let summary = summarize_features(model, signal, layer)?;
    let z = z_normalize(&signal.samples);
    let dtw = dtw_distance(&z, &summary.curve)?;
    let mse = cwt_mse_raw(&signal.samples, &summary.curve, scales)?;
    let slack = slack_raw(&signal.samples, &summary.curve, peaks)?;
    Ok(MetricTriple {
        sample_id: signal.id.clone(),
        dtw,
        mse,
        slack: slack.value,
        slack_undefined: slack.undefined,
    })
}

/// Scores every signal in parallel; output is in dataset order.
pub fn score_dataset(model: &Model, ds: &Dataset, cfg: &MetricConfig) -> Result<Vec<MetricTriple>> {
    let Some(len) = ds.signal_len() else {
        return Ok(Vec::new());
    };
    let layer = cfg.resolve_layer(model)?;
    let scales = cfg.resolve_scales(len);
    let peaks = cfg.peak_config(len);
    ds.signals()
        .par_iter()
        .map(|s| score_sample(model, s, layer, &scales, &peaks))
        .collect()
}

/// Writes the per-sample audit table `id,label,correct,dtw,mse,slack`.
pub fn write_metric_dump(
    path: &Path,
    batch: &Dataset,
    triples: &[MetricTriple],
    correct: &[bool],
) -> Result<()> {
    if triples.len() != batch.len() || correct.len() != batch.len() {
        return Err(Error::Shape("metric dump columns differ in length".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "id,label,correct,dtw,mse,slack").map_err(io)?;
    for ((s, t), c) in batch.signals().iter().zip(triples).zip(correct) {
        writeln!(out, "{},{},{},{},{},{}", s.id, s.label, c, t.dtw, t.mse, t.slack).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::{build_model, ArchitectureSpec, LayerSpec};
    use crate::signal::{ClassLabel, DatasetRole, Provenance};

    /// One kernel-1 channel with weight w and bias 0: the feature map is
    /// tanh(w x), which z-normalizes to the z-normalized input as w -> 0.
    fn near_identity_model(len: usize) -> Model {
        let spec = ArchitectureSpec {
            input_len: len,
            layers: vec![
                LayerSpec::conv(1, 1),
                LayerSpec::GlobalAvgPool,
                LayerSpec::DenseSoftmax { classes: 2 },
            ],
        };
        let model = build_model(&spec, 0).unwrap();
        let mut p = model.params().to_vec();
        p[0] = 1e-7;
        p[1] = 0.0;
        model.with_params(p).unwrap()
    }

    fn spiky(len: usize, period: usize, phase: usize) -> Vec<f64> {
        (0..len)
            .map(|i| if i % period == phase { 4.0 } else { ((i * 7) % 5) as f64 * 0.01 })
            .collect()
    }

    #[test]
    fn identity_summary_scores_near_zero() {
        let model = near_identity_model(100);
        let s = Signal::new("a", spiky(100, 20, 4), 40.0, 0, Provenance::Synthetic);
        let cfg = MetricConfig::default();
        let t = score_sample(&model, &s, 0, &cfg.resolve_scales(100), &cfg.peak_config(100)).unwrap();
        assert!(t.dtw < 1e-6, "{t:?}");
        assert!(t.mse < 1e-12, "{t:?}");
        assert_eq!(t.slack, 0.0);
        assert!(!t.slack_undefined);
    }

    #[test]
    fn dataset_scores_are_permutation_invariant() {
        let spec = ArchitectureSpec {
            input_len: 60,
            layers: vec![
                LayerSpec::conv(3, 5),
                LayerSpec::conv(3, 5),
                LayerSpec::GlobalAvgPool,
                LayerSpec::DenseSoftmax { classes: 2 },
            ],
        };
        let model = build_model(&spec, 4).unwrap();
        let signals: Vec<Signal> = (0..6)
            .map(|i| Signal::new(format!("s{i}"), spiky(60, 12, i), 40.0, i % 2, Provenance::Synthetic))
            .collect();
        let ds = Dataset::new(signals.clone(), ClassLabel::generic(2), DatasetRole::IncomingBatch).unwrap();
        let mut rev = signals;
        rev.reverse();
        let ds_rev = Dataset::new(rev, ClassLabel::generic(2), DatasetRole::IncomingBatch).unwrap();
        let a = score_dataset(&model, &ds, &MetricConfig::default()).unwrap();
        let mut b = score_dataset(&model, &ds_rev, &MetricConfig::default()).unwrap();
        b.reverse();
        assert_eq!(a, b);
        for t in &a {
            assert!(t.dtw >= 0.0 && t.mse >= 0.0 && t.slack >= 0.0);
        }
    }

    #[test]
    fn metric_dump_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        let ds = Dataset::new(
            vec![Signal::new("a", vec![0.0, 1.0], 1.0, 1, Provenance::Synthetic)],
            ClassLabel::generic(2),
            DatasetRole::IncomingBatch,
        )
        .unwrap();
        let t = MetricTriple {
            sample_id: "a".into(),
            dtw: 1.5,
            mse: 0.25,
            slack: 20.0,
            slack_undefined: false,
        };
        write_metric_dump(&path, &ds, &[t], &[true]).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "id,label,correct,dtw,mse,slack\na,1,true,1.5,0.25,20\n"
        );
    }
}
