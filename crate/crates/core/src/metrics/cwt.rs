use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::summary::{z_normalize, FeatureSummary};
use crate::error::{Error, Result};
use crate::signal::Signal;

/// Ricker (Mexican-hat) wavelet at offset `t` for scale `a`:
/// `2 / (sqrt(3a) * pi^(1/4)) * (1 - t^2/a^2) * exp(-t^2 / (2a^2))`.
pub fn ricker(t: f64, a: f64) -> f64 {
    let norm = 2.0 / ((3.0 * a).sqrt() * PI.powf(0.25));
    let u = (t / a) * (t / a);
    norm * (1.0 - u) * (-0.5 * u).exp()
}

/// `count` log-spaced scales from `lo` to `hi` inclusive.
pub fn log_scales(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Sixteen log-spaced scales spanning `[2, len/4]` (upper end at least 3).
pub fn default_scales(len: usize) -> Vec<f64> {
    log_scales(2.0, (len as f64 / 4.0).max(3.0), 16)
}

/// Time-scale coefficients, row-major `scales x len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalogram {
    pub scales: Vec<f64>,
    pub len: usize,
    pub coefficients: Vec<f64>,
}

impl Scalogram {
    pub fn row(&self, scale_index: usize) -> &[f64] {
        &self.coefficients[scale_index * self.len..(scale_index + 1) * self.len]
    }
}

fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.len() < 2 {
        return Err(Error::Config(format!(
            "a scalogram needs at least 2 scales, got {}",
            scales.len()
        )));
    }
    match scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        Some(&bad) => Err(Error::Scale(bad)),
        None => Ok(()),
    }
}

/// Continuous wavelet transform with the Ricker wavelet. Each output sample
/// is the full (untruncated) sum over the input with zeros beyond its ends,
/// so the output has the input's length.
pub fn cwt(signal: &[f64], scales: &[f64]) -> Result<Scalogram> {
    if signal.is_empty() {
        return Err(Error::EmptyInput("cwt signal"));
    }
    check_scales(scales)?;
    let n = signal.len();
    let mut coefficients = Vec::with_capacity(scales.len() * n);
    // kernel[d + n - 1] = psi(d) for d in -(n-1)..=(n-1)
    let mut kernel = vec![0.0; 2 * n - 1];
    for &a in scales {
        for (i, k) in kernel.iter_mut().enumerate() {
            *k = ricker(i as f64 - (n - 1) as f64, a);
        }
        for t in 0..n {
            let mut acc = 0.0;
            for (m, x) in signal.iter().enumerate() {
                acc += x * kernel[t + n - 1 - m];
            }
            coefficients.push(acc);
        }
    }
    Ok(Scalogram {
        scales: scales.to_vec(),
        len: n,
        coefficients,
    })
}

/// Mean squared difference between two scalograms of equal shape.
pub fn scalogram_mse(a: &Scalogram, b: &Scalogram) -> Result<f64> {
    if a.len != b.len || a.scales.len() != b.scales.len() {
        return Err(Error::Shape("scalograms differ in shape".into()));
    }
    let n = a.coefficients.len() as f64;
    Ok(a.coefficients
        .iter()
        .zip(&b.coefficients)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
}

/// MSE between the scalogram of the z-normalized signal and that of the
/// feature summary curve.
pub fn cwt_mse(signal: &Signal, summary: &FeatureSummary, scales: &[f64]) -> Result<f64> {
    cwt_mse_raw(&signal.samples, &summary.curve, scales)
}

pub(crate) fn cwt_mse_raw(signal: &[f64], curve: &[f64], scales: &[f64]) -> Result<f64> {
    if signal.len() != curve.len() {
        return Err(Error::Shape(format!(
            "signal has {} samples, summary {}",
            signal.len(),
            curve.len()
        )));
    }
    let a = cwt(&z_normalize(signal), scales)?;
    let b = cwt(curve, scales)?;
    scalogram_mse(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_signal_zero_scalogram() {
        let s = cwt(&[0.0; 10], &[1.0, 2.0, 3.0]).unwrap();
        assert!(s.coefficients.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn impulse_response_is_the_wavelet() {
        let mut x = vec![0.0; 20];
        x[7] = 1.0;
        let scales = [1.5, 4.0];
        let s = cwt(&x, &scales).unwrap();
        for (k, &a) in scales.iter().enumerate() {
            for (n, v) in s.row(k).iter().enumerate() {
                let t = n as f64 - 7.0;
                let expected = 2.0 / ((3.0 * a).sqrt() * PI.powf(0.25))
                    * (1.0 - t * t / (a * a))
                    * (-(t * t) / (2.0 * a * a)).exp();
                assert!((v - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_in_input() {
        let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.9).sin()).collect();
        let scaled: Vec<f64> = x.iter().map(|v| -2.5 * v).collect();
        let scales = default_scales(16);
        let a = cwt(&x, &scales).unwrap();
        let b = cwt(&scaled, &scales).unwrap();
        for (u, v) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((-2.5 * u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_scales_rejected() {
        assert!(matches!(cwt(&[1.0], &[1.0, -2.0]), Err(Error::Scale(_))));
        assert!(cwt(&[1.0], &[1.0]).is_err());
        assert!(cwt(&[], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn default_scales_are_log_spaced() {
        let s = default_scales(200);
        assert_eq!(s.len(), 16);
        assert!((s[0] - 2.0).abs() < 1e-12 && (s[15] - 50.0).abs() < 1e-9);
        let r = s[1] / s[0];
        for w in s.windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-9);
        }
    }

    #[test]
    fn mse_zero_for_matching_summary_and_symmetric() {
        let x: Vec<f64> = (0..12).map(|i| ((i * i) as f64 * 0.3).cos() + 4.0).collect();
        let z = z_normalize(&x);
        let scales = [2.0, 3.0];
        assert_eq!(cwt_mse_raw(&x, &z, &scales).unwrap(), 0.0);
        let y: Vec<f64> = (0..12).map(|i| (i as f64).sqrt()).collect();
        let zy = z_normalize(&y);
        let ab = cwt_mse_raw(&x, &zy, &scales).unwrap();
        let ba = cwt_mse_raw(&y, &z, &scales).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!(cwt_mse_raw(&x, &zy[..11], &scales).is_err());
    }
}
