use serde::{Deserialize, Serialize};

use crate::cnn::{FeatureMap, Model};
use crate::error::{Error, Result};
use crate::signal::Signal;

/// Standard deviations below this are treated as a constant sequence.
const FLAT_STD: f64 = 1e-12;

/// Zero-mean, unit-variance copy (population variance). Constant input
/// maps to all zeros.
pub fn z_normalize(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std <= FLAT_STD {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - mean) / std).collect()
}

/// Linear interpolation of `x` onto `len` evenly spaced points spanning the
/// same support (first and last samples are kept).
pub fn resample_linear(x: &[f64], len: usize) -> Vec<f64> {
    if x.len() == len {
        return x.to_vec();
    }
    if x.len() == 1 || len == 1 {
        return vec![x[0]; len];
    }
    let step = (x.len() - 1) as f64 / (len - 1) as f64;
    (0..len)
        .map(|j| {
            let pos = j as f64 * step;
            let lo = (pos.floor() as usize).min(x.len() - 2);
            let frac = pos - lo as f64;
            x[lo] * (1.0 - frac) + x[lo + 1] * frac
        })
        .collect()
}

/// The model-side curve every metric compares a signal against: the channel
/// mean of one convolution layer, stretched to the input length and
/// z-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub curve: Vec<f64>,
    pub source_layer: usize,
}

impl FeatureSummary {
    pub fn from_feature_map(map: &FeatureMap, len: usize) -> Self {
        let mean = map.channel_mean();
        FeatureSummary {
            curve: z_normalize(&resample_linear(&mean, len)),
            source_layer: map.layer_index,
        }
    }

    pub fn len(&self) -> usize {
        self.curve.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curve.is_empty()
    }
}

/// Summarizes the feature map of conv layer `layer` for one signal.
pub fn summarize_features(model: &Model, signal: &Signal, layer: usize) -> Result<FeatureSummary> {
    if signal.is_empty() {
        return Err(Error::EmptyInput("signal"));
    }
    let map = model.feature_map(&signal.samples, layer)?;
    Ok(FeatureSummary::from_feature_map(&map, signal.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::{build_model, ArchitectureConfig};
    use crate::signal::Provenance;

    fn map(channels: Vec<Vec<f64>>) -> FeatureMap {
        let timesteps = channels[0].len();
        FeatureMap {
            layer_index: 3,
            channels: channels.len(),
            timesteps,
            values: channels.concat(),
        }
    }

    #[test]
    fn identity_channel_reproduces_normalized_input() {
        let input = vec![0.5, 2.0, -1.0, 3.0, 0.0, 1.5];
        let z = z_normalize(&input);
        let s = FeatureSummary::from_feature_map(&map(vec![z.clone()]), input.len());
        for (a, b) in s.curve.iter().zip(&z) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(s.source_layer, 3);
    }

    #[test]
    fn constant_activations_give_zero_curve() {
        let s = FeatureSummary::from_feature_map(&map(vec![vec![0.7; 5], vec![0.7; 5]]), 9);
        assert_eq!(s.curve, vec![0.0; 9]);
    }

    #[test]
    fn opposite_channels_cancel() {
        let c = vec![0.1, -0.4, 0.9, 0.3];
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        let s = FeatureSummary::from_feature_map(&map(vec![c, neg]), 4);
        assert_eq!(s.curve, vec![0.0; 4]);
    }

    #[test]
    fn normalized_curve_statistics() {
        let s = FeatureSummary::from_feature_map(&map(vec![vec![1.0, 4.0, 2.0, 8.0, 3.0]]), 12);
        let n = s.curve.len() as f64;
        let mean = s.curve.iter().sum::<f64>() / n;
        let var = s.curve.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-6 && (var - 1.0).abs() < 1e-6);
    }

    #[test]
    fn resample_keeps_endpoints_and_interpolates() {
        assert_eq!(resample_linear(&[0.0, 2.0], 3), vec![0.0, 1.0, 2.0]);
        assert_eq!(resample_linear(&[1.0, 3.0, 5.0], 5), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn non_conv_layer_is_layer_error() {
        let spec = ArchitectureConfig::a()
            .with_widths(&[2; 10])
            .build(64, 2)
            .unwrap();
        let model = build_model(&spec, 0).unwrap();
        let s = Signal::new("x", vec![0.1; 64], 40.0, 0, Provenance::Synthetic);
        assert!(matches!(summarize_features(&model, &s, 5), Err(Error::Layer(5))));
        let ok = summarize_features(&model, &s, 10).unwrap();
        assert_eq!(ok.len(), 64);
    }
}
