use serde::{Deserialize, Serialize};

/// Settings of the threshold-and-distance R-peak detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakConfig {
    /// Peaks must exceed `mean + k * std` of the curve.
    pub k: f64,
    /// Minimum index distance between two accepted peaks.
    pub min_distance: usize,
}

impl PeakConfig {
    /// Default detector for a window holding `beats` heartbeats in `len`
    /// samples: `k = 1.5`, minimum distance 0.2 of the expected beat length.
    pub fn for_window(len: usize, beats: usize) -> Self {
        let beat = len as f64 / beats.max(1) as f64;
        PeakConfig {
            k: 1.5,
            min_distance: (0.2 * beat).round().max(1.0) as usize,
        }
    }
}

/// R-peak positions and the intervals between consecutive peaks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakList {
    pub r_peak_indices: Vec<usize>,
    pub rr_intervals: Vec<usize>,
}

impl PeakList {
    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        let rr_intervals = indices.windows(2).map(|w| w[1] - w[0]).collect();
        PeakList {
            r_peak_indices: indices,
            rr_intervals,
        }
    }

    pub fn len(&self) -> usize {
        self.r_peak_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_peak_indices.is_empty()
    }
}

/// Local maxima above `mean + k * std`, thinned greedily from the tallest
/// down so that no two kept peaks are closer than `min_distance`.
/// Plateaus count once, at their first index; the window edges qualify when
/// they exceed their single neighbour.
pub fn detect_r_peaks(curve: &[f64], cfg: &PeakConfig) -> PeakList {
    let n = curve.len();
    if n == 0 {
        return PeakList::default();
    }
    let mean = curve.iter().sum::<f64>() / n as f64;
    let var = curve.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let threshold = mean + cfg.k * var.sqrt();

    let mut candidates = Vec::new();
    let mut i = 0;
    while i < n {
        // Extent of the plateau starting at i.
        let mut j = i;
        while j + 1 < n && curve[j + 1] == curve[i] {
            j += 1;
        }
        let left_ok = i == 0 || curve[i - 1] < curve[i];
        let right_ok = j == n - 1 || curve[j + 1] < curve[i];
        let isolated = n == 1 || !(i == 0 && j == n - 1);
        if left_ok && right_ok && isolated && curve[i] > threshold {
            candidates.push(i);
        }
        i = j + 1;
    }

    candidates.sort_by(|&a, &b| curve[b].total_cmp(&curve[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::with_capacity(candidates.len());
    for c in candidates {
        if kept.iter().all(|&k| c.abs_diff(k) >= cfg.min_distance) {
            kept.push(c);
        }
    }
    PeakList::from_indices(kept)
}
