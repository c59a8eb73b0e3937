//! Signals, datasets and the tooling that produces them: file ingestion,
//! stratified splitting, synthetic ECG generation and corruption injection.

mod corrupt;
mod io;
mod split;
mod synth;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use corrupt::{corrupt_samples, CorruptionKind, CorruptionLog};
pub use io::{
    load_dataset, load_peak_sidecar, save_dataset, save_peak_sidecar, DataFormat, LoadOptions,
    PeakRecord,
};
pub use split::{split_dataset, stratified_allocation};
pub use synth::{generate_synthetic, Bump, ClassMorphology, SynthConfig, SyntheticDataset};

/// Where a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Asserted,
    NonAsserted,
    Synthetic,
    Corrupted,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Asserted => "asserted",
            Provenance::NonAsserted => "non_asserted",
            Provenance::Synthetic => "synthetic",
            Provenance::Corrupted => "corrupted",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "asserted" => Ok(Provenance::Asserted),
            "non_asserted" => Ok(Provenance::NonAsserted),
            "synthetic" => Ok(Provenance::Synthetic),
            "corrupted" => Ok(Provenance::Corrupted),
            other => Err(format!("unknown provenance {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassLabel {
    pub index: usize,
    pub name: String,
}

impl ClassLabel {
    /// `class_0`, `class_1`, ... for datasets that carry no class names.
    pub fn generic(count: usize) -> Vec<ClassLabel> {
        (0..count)
            .map(|index| ClassLabel {
                index,
                name: format!("class_{index}"),
            })
            .collect()
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Vec<ClassLabel> {
        names
            .iter()
            .enumerate()
            .map(|(index, name)| ClassLabel {
                index,
                name: name.as_ref().to_string(),
            })
            .collect()
    }
}

/// One fixed-length single-lead waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub id: String,
    pub samples: Vec<f64>,
    pub sampling_rate: f64,
    pub label: usize,
    pub provenance: Provenance,
}

impl Signal {
    pub fn new(
        id: impl Into<String>,
        samples: Vec<f64>,
        sampling_rate: f64,
        label: usize,
        provenance: Provenance,
    ) -> Self {
        Signal {
            id: id.into(),
            samples,
            sampling_rate,
            label,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetRole {
    /// The trusted pool a model was first trained on.
    AssertedPool,
    /// A batch of newly arrived, unverified samples.
    IncomingBatch,
    TestSet,
}

/// A validated collection of equal-length signals over a fixed class set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    signals: Vec<Signal>,
    classes: Vec<ClassLabel>,
    role: DatasetRole,
}

impl Dataset {
    /// Checks every dataset invariant: equal non-zero lengths, finite values,
    /// labels within the class set and unique ids.
    pub fn new(signals: Vec<Signal>, classes: Vec<ClassLabel>, role: DatasetRole) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Dataset("class set is empty".into()));
        }
        let mut seen = HashSet::with_capacity(signals.len());
        let expected_len = signals.first().map(Signal::len);
        for s in &signals {
            if s.is_empty() {
                return Err(Error::Shape(format!("signal {} has no samples", s.id)));
            }
            if Some(s.len()) != expected_len {
                return Err(Error::Shape(format!(
                    "signal {} has length {}, expected {}",
                    s.id,
                    s.len(),
                    expected_len.unwrap_or_default()
                )));
            }
            if let Some(pos) = s.samples.iter().position(|v| !v.is_finite()) {
                return Err(Error::Dataset(format!(
                    "signal {} has a non-finite value at sample {pos}",
                    s.id
                )));
            }
            if s.label >= classes.len() {
                return Err(Error::Label {
                    id: s.id.clone(),
                    label: s.label,
                    class_count: classes.len(),
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Dataset(format!("duplicate sample id {}", s.id)));
            }
        }
        Ok(Dataset {
            signals,
            classes,
            role,
        })
    }

    /// Builds a dataset sharing this one's classes and role.
    pub fn derive(&self, signals: Vec<Signal>) -> Result<Self> {
        Dataset::new(signals, self.classes.clone(), self.role)
    }

    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn into_signals(self) -> Vec<Signal> {
        self.signals
    }

    pub fn classes(&self) -> &[ClassLabel] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn role(&self) -> DatasetRole {
        self.role
    }

    pub fn with_role(mut self, role: DatasetRole) -> Self {
        self.role = role;
        self
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    /// Common signal length, `None` for an empty dataset.
    pub fn signal_len(&self) -> Option<usize> {
        self.signals.first().map(Signal::len)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.signals.iter().map(|s| s.id.as_str())
    }

    pub fn get(&self, id: &str) -> Option<&Signal> {
        self.signals.iter().find(|s| s.id == id)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for s in &self.signals {
            counts[s.label] += 1;
        }
        counts
    }

    /// Indices of the signals belonging to each class, in dataset order.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.classes.len()];
        for (i, s) in self.signals.iter().enumerate() {
            out[s.label].push(i);
        }
        out
    }

    /// The signals whose ids are in `ids`, kept in dataset order.
    pub fn subset<'a, I>(&self, ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let wanted: HashSet<&str> = ids.into_iter().collect();
        let signals = self
            .signals
            .iter()
            .filter(|s| wanted.contains(s.id.as_str()))
            .cloned()
            .collect();
        self.derive(signals)
    }

    /// Concatenation of two datasets over the same class set.
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        if self.classes != other.classes {
            return Err(Error::Dataset("class sets differ".into()));
        }
        let mut signals = self.signals.clone();
        signals.extend(other.signals.iter().cloned());
        self.derive(signals)
    }

    /// Count of signals per provenance, for reporting.
    pub fn provenance_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for s in &self.signals {
            *out.entry(s.provenance.as_str()).or_default() += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(id: &str, samples: Vec<f64>, label: usize) -> Signal {
        Signal::new(id, samples, 100.0, label, Provenance::Asserted)
    }

    #[test]
    fn rejects_inconsistent_lengths() {
        let err = Dataset::new(
            vec![sig("a", vec![0.0; 8], 0), sig("b", vec![0.0; 9], 1)],
            ClassLabel::generic(2),
            DatasetRole::TestSet,
        )
        .unwrap_err();
        assert_eq!(err.category(), "ShapeError");
    }

    #[test]
    fn rejects_label_out_of_range() {
        let err = Dataset::new(
            vec![sig("a", vec![0.0; 4], 2)],
            ClassLabel::generic(2),
            DatasetRole::TestSet,
        )
        .unwrap_err();
        assert_eq!(err.category(), "LabelError");
    }

    #[test]
    fn rejects_duplicate_ids_and_non_finite() {
        let dup = Dataset::new(
            vec![sig("a", vec![0.0; 4], 0), sig("a", vec![1.0; 4], 1)],
            ClassLabel::generic(2),
            DatasetRole::TestSet,
        );
        assert!(dup.is_err());
        let nan = Dataset::new(
            vec![sig("a", vec![0.0, f64::NAN], 0)],
            ClassLabel::generic(2),
            DatasetRole::TestSet,
        );
        assert!(nan.is_err());
    }

    #[test]
    fn subset_keeps_dataset_order() {
        let ds = Dataset::new(
            vec![
                sig("a", vec![0.0; 2], 0),
                sig("b", vec![0.0; 2], 1),
                sig("c", vec![0.0; 2], 0),
            ],
            ClassLabel::generic(2),
            DatasetRole::IncomingBatch,
        )
        .unwrap();
        let sub = ds.subset(["c", "a"]).unwrap();
        assert_eq!(sub.ids().collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(ds.class_counts(), vec![2, 1]);
    }
}
