//! Parametric synthetic ECG: every beat is a sum of five Gaussian bumps
//! (P, Q, R, S, T) placed around the R time, beats follow jittered RR
//! intervals, and the window is finished with baseline wander and white noise.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ClassLabel, Dataset, DatasetRole, PeakRecord, Provenance, Signal};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// One Gaussian wave component. `width` is the standard deviation and
/// `offset` the center relative to the R time, both in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub amplitude: f64,
    pub width: f64,
    pub offset: f64,
}

impl Bump {
    pub const fn new(amplitude: f64, width: f64, offset: f64) -> Self {
        Bump {
            amplitude,
            width,
            offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassMorphology {
    pub name: String,
    pub p: Bump,
    pub q: Bump,
    pub r: Bump,
    pub s: Bump,
    pub t: Bump,
    /// Mean RR interval in seconds.
    pub rr_mean: f64,
    /// Standard deviation of the RR interval in seconds.
    pub rr_jitter: f64,
}

impl ClassMorphology {
    fn bumps(&self) -> [Bump; 5] {
        [self.p, self.q, self.r, self.s, self.t]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub classes: Vec<ClassMorphology>,
    pub sampling_rate: f64,
    pub beats_per_window: usize,
    /// RR interval (seconds) used to size the window:
    /// `len = round(beats_per_window * nominal_rr * sampling_rate)`.
    pub nominal_rr: f64,
    /// Standard deviation of additive white noise.
    pub noise_amplitude: f64,
    /// Relative per-beat standard deviation applied to every bump amplitude.
    pub amplitude_jitter: f64,
    /// Peak amplitude of a slow sinusoidal baseline drift.
    pub baseline_wander: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig::four_class(0)
    }
}

impl SynthConfig {
    /// Four rhythm classes loosely shaped after NSR, AFIB, PVC and LBB.
    pub fn four_class(seed: u64) -> Self {
        let nsr = ClassMorphology {
            name: "NSR".into(),
            p: Bump::new(0.15, 0.025, -0.17),
            q: Bump::new(-0.12, 0.012, -0.035),
            r: Bump::new(1.0, 0.016, 0.0),
            s: Bump::new(-0.25, 0.014, 0.035),
            t: Bump::new(0.3, 0.045, 0.27),
            rr_mean: 0.8,
            rr_jitter: 0.03,
        };
        let afib = ClassMorphology {
            name: "AFIB".into(),
            p: Bump::new(0.0, 0.025, -0.17),
            rr_mean: 0.68,
            rr_jitter: 0.14,
            t: Bump::new(0.22, 0.045, 0.25),
            ..nsr.clone()
        };
        let pvc = ClassMorphology {
            name: "PVC".into(),
            p: Bump::new(0.0, 0.025, -0.17),
            q: Bump::new(0.0, 0.012, -0.04),
            r: Bump::new(1.2, 0.035, 0.0),
            s: Bump::new(-0.45, 0.03, 0.07),
            t: Bump::new(-0.4, 0.06, 0.3),
            rr_mean: 0.86,
            rr_jitter: 0.06,
        };
        let lbb = ClassMorphology {
            name: "LBB".into(),
            p: Bump::new(0.12, 0.025, -0.19),
            q: Bump::new(0.0, 0.012, -0.04),
            r: Bump::new(0.8, 0.028, -0.015),
            s: Bump::new(0.55, 0.025, 0.045),
            t: Bump::new(-0.25, 0.055, 0.3),
            rr_mean: 0.9,
            rr_jitter: 0.04,
        };
        SynthConfig {
            classes: vec![nsr, afib, pvc, lbb],
            sampling_rate: 40.0,
            beats_per_window: 5,
            nominal_rr: 0.8,
            noise_amplitude: 0.05,
            amplitude_jitter: 0.1,
            baseline_wander: 0.1,
            seed,
        }
    }

    pub fn window_len(&self) -> usize {
        (self.beats_per_window as f64 * self.nominal_rr * self.sampling_rate).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.classes.is_empty() {
            return fail("synthetic config has no classes".into());
        }
        if !(self.sampling_rate > 0.0 && self.sampling_rate.is_finite()) {
            return fail(format!("sampling rate {} must be positive", self.sampling_rate));
        }
        if self.beats_per_window == 0 || !(self.nominal_rr > 0.0) || self.window_len() == 0 {
            return fail("window must span at least one sample".into());
        }
        for field in [self.noise_amplitude, self.amplitude_jitter, self.baseline_wander] {
            if !(field >= 0.0 && field.is_finite()) {
                return fail("noise, jitter and wander must be finite and non-negative".into());
            }
        }
        for c in &self.classes {
            if !(c.rr_mean > 0.0 && c.rr_mean.is_finite()) {
                return fail(format!("class {}: RR mean must be positive", c.name));
            }
            if !(c.rr_jitter >= 0.0 && c.rr_jitter.is_finite()) {
                return fail(format!("class {}: RR jitter must be non-negative", c.name));
            }
            for b in c.bumps() {
                if !b.amplitude.is_finite() || !b.offset.is_finite() || !(b.width > 0.0) {
                    return fail(format!("class {}: bumps need finite amplitude and positive width", c.name));
                }
            }
        }
        Ok(())
    }
}

/// Generated signals plus the ground-truth R-peak sample indices of each.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub peaks: Vec<PeakRecord>,
}

/// Generates `n_per_class` windows for every class, ids `"{prefix}{class}-{i}"`.
pub fn generate_synthetic(
    config: &SynthConfig,
    n_per_class: usize,
    id_prefix: &str,
    role: DatasetRole,
) -> Result<SyntheticDataset> {
    config.validate()?;
    if n_per_class == 0 {
        return Err(Error::Config("n_per_class must be at least 1".into()));
    }
    let fs = config.sampling_rate;
    let len = config.window_len();
    let duration = len as f64 / fs;
    let mut rng = seeded(config.seed);
    let mut signals = Vec::with_capacity(n_per_class * config.classes.len());
    let mut peaks = Vec::with_capacity(signals.capacity());

    for (label, class) in config.classes.iter().enumerate() {
        let bumps = class.bumps();
        for i in 0..n_per_class {
            let mut samples = vec![0.0; len];
            let mut r_peaks = Vec::new();

            // Start one beat before the window so partial waves at the left edge exist.
            let mut r_time = rng.random::<f64>() * class.rr_mean - class.rr_mean;
            while r_time < duration + class.rr_mean {
                for (k, b) in bumps.iter().enumerate() {
                    let jitter: f64 = rng.sample(StandardNormal);
                    let amp = b.amplitude * (1.0 + config.amplitude_jitter * jitter);
                    let center = r_time + b.offset;
                    if amp == 0.0 {
                        continue;
                    }
                    add_gaussian(&mut samples, fs, amp, center, b.width);
                    if k == 2 {
                        let idx = (center * fs).round();
                        if idx >= 0.0 && (idx as usize) < len {
                            r_peaks.push(idx as usize);
                        }
                    }
                }
                let step: f64 = rng.sample::<f64, _>(StandardNormal) * class.rr_jitter + class.rr_mean;
                r_time += step.max(0.3 * class.rr_mean);
            }

            let phase = rng.random::<f64>() * 2.0 * PI;
            let freq = 0.15 + 0.2 * rng.random::<f64>();
            for (n, v) in samples.iter_mut().enumerate() {
                let t = n as f64 / fs;
                *v += config.baseline_wander * (2.0 * PI * freq * t + phase).sin();
                if config.noise_amplitude > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    *v += config.noise_amplitude * z;
                }
            }

            let id = format!("{id_prefix}{}-{i}", class.name);
            peaks.push(PeakRecord {
                id: id.clone(),
                r_peaks,
            });
            signals.push(Signal::new(id, samples, fs, label, Provenance::Synthetic));
        }
    }

    let names: Vec<&str> = config.classes.iter().map(|c| c.name.as_str()).collect();
    let dataset = Dataset::new(signals, ClassLabel::from_names(&names), role)?;
    Ok(SyntheticDataset { dataset, peaks })
}

fn add_gaussian(samples: &mut [f64], fs: f64, amplitude: f64, center: f64, width: f64) {
    let lo = ((center - 5.0 * width) * fs).floor().max(0.0) as usize;
    let hi = ((center + 5.0 * width) * fs).ceil();
    if hi < 0.0 {
        return;
    }
    let hi = (hi as usize).min(samples.len().saturating_sub(1));
    for (n, v) in samples.iter_mut().enumerate().take(hi + 1).skip(lo) {
        let d = (n as f64 / fs - center) / width;
        *v += amplitude * (-0.5 * d * d).exp();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_per_class() {
        let cfg = SynthConfig::four_class(1);
        let out = generate_synthetic(&cfg, 115, "o-", DatasetRole::AssertedPool).unwrap();
        assert_eq!(out.dataset.len(), 460);
        assert_eq!(out.dataset.class_counts(), vec![115; 4]);
        assert_eq!(out.dataset.signal_len(), Some(cfg.window_len()));
        assert_eq!(out.peaks.len(), 460);
    }

    #[test]
    fn noiseless_generation_is_bit_identical() {
        let cfg = SynthConfig {
            noise_amplitude: 0.0,
            ..SynthConfig::four_class(5)
        };
        let a = generate_synthetic(&cfg, 3, "", DatasetRole::TestSet).unwrap();
        let b = generate_synthetic(&cfg, 3, "", DatasetRole::TestSet).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.peaks, b.peaks);
    }

    #[test]
    fn zero_r_amplitude_yields_no_r_peaks() {
        let mut cfg = SynthConfig::four_class(2);
        cfg.classes[1].r.amplitude = 0.0;
        let out = generate_synthetic(&cfg, 4, "", DatasetRole::TestSet).unwrap();
        for (rec, s) in out.peaks.iter().zip(out.dataset.signals()) {
            if s.label == 1 {
                assert!(rec.r_peaks.is_empty());
            } else {
                assert!(rec.r_peaks.len() >= 4, "{rec:?}");
            }
        }
    }

    #[test]
    fn non_positive_rr_is_config_error() {
        let mut cfg = SynthConfig::four_class(2);
        cfg.classes[0].rr_mean = 0.0;
        let err = generate_synthetic(&cfg, 1, "", DatasetRole::TestSet).unwrap_err();
        assert_eq!(err.category(), "ConfigError");
    }

    #[test]
    fn nearest_centroid_beats_chance() {
        let train = generate_synthetic(&SynthConfig::four_class(10), 30, "", DatasetRole::TestSet)
            .unwrap()
            .dataset;
        let test = generate_synthetic(&SynthConfig::four_class(11), 30, "", DatasetRole::TestSet)
            .unwrap()
            .dataset;
        let len = train.signal_len().unwrap();
        let mut centroids = vec![vec![0.0; len]; 4];
        for s in train.signals() {
            for (c, v) in centroids[s.label].iter_mut().zip(&s.samples) {
                *c += v / 30.0;
            }
        }
        let correct = test
            .signals()
            .iter()
            .filter(|s| {
                let dist = |c: &Vec<f64>| -> f64 {
                    c.iter().zip(&s.samples).map(|(a, b)| (a - b).powi(2)).sum()
                };
                let best = (0..4)
                    .min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b])))
                    .unwrap();
                best == s.label
            })
            .count();
        assert!(correct as f64 / test.len() as f64 > 0.25, "{correct}");
    }
}
