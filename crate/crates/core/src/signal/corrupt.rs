use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    /// White noise with the signal's own standard deviation.
    AdditiveNoise,
    /// A contiguous 30-60% stretch held at its first value.
    FlatlineSegment,
    /// Label moved to a different class; waveform untouched.
    LabelFlip,
}

/// Which samples were corrupted and how.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorruptionLog {
    pub corrupted: BTreeMap<String, CorruptionKind>,
}

impl CorruptionLog {
    pub fn contains(&self, id: &str) -> bool {
        self.corrupted.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.corrupted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corrupted.is_empty()
    }
}

/// Replaces `round(fraction * |ds|)` seeded-random samples with corrupted
/// versions. Each victim gets one kind drawn uniformly from `kinds`.
pub fn corrupt_samples(
    ds: &Dataset,
    fraction: f64,
    kinds: &[CorruptionKind],
    seed: u64,
) -> Result<(Dataset, CorruptionLog)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!("corruption fraction {fraction} not in [0, 1]")));
    }
    let count = (fraction * ds.len() as f64).round() as usize;
    if fraction > 0.0 && count == 0 {
        return Err(Error::Config(format!(
            "corruption fraction {fraction} selects no samples out of {}",
            ds.len()
        )));
    }
    if count > 0 && kinds.is_empty() {
        return Err(Error::Config("no corruption kinds given".into()));
    }
    if kinds.contains(&CorruptionKind::LabelFlip) && ds.class_count() < 2 {
        return Err(Error::Config("label flips need at least two classes".into()));
    }

    let mut rng = seeded(seed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rng);
    let mut victims = order[..count].to_vec();
    victims.sort_unstable();

    let mut signals = ds.signals().to_vec();
    let mut log = CorruptionLog::default();
    for i in victims {
        let kind = *kinds.choose(&mut rng).expect("kinds is non-empty");
        let s = &mut signals[i];
        match kind {
            CorruptionKind::AdditiveNoise => {
                let n = s.samples.len() as f64;
                let mean = s.samples.iter().sum::<f64>() / n;
                let var = s.samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let scale = var.sqrt().max(1e-3);
                for v in &mut s.samples {
                    let z: f64 = rng.sample(StandardNormal);
                    *v += scale * z;
                }
            }
            CorruptionKind::FlatlineSegment => {
                let len = s.samples.len();
                let seg = ((len as f64) * rng.random_range(0.3..0.6)).round().max(1.0) as usize;
                let seg = seg.min(len);
                let start = rng.random_range(0..=len - seg);
                let hold = s.samples[start];
                s.samples[start..start + seg].fill(hold);
            }
            CorruptionKind::LabelFlip => {
                let shift = rng.random_range(1..ds.class_count());
                s.label = (s.label + shift) % ds.class_count();
            }
        }
        s.provenance = Provenance::Corrupted;
        log.corrupted.insert(s.id.clone(), kind);
    }
    Ok((ds.derive(signals)?, log))
}
