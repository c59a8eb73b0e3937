//! Budgeted, class-balanced core-set selection.
//!
//! An incoming batch is first split by whether the current model classifies
//! each sample correctly. Every misclassified sample is kept. Within each
//! class, the correctly classified samples are ranked by each explanation
//! metric and the `x` lowest-scoring ones not already taken are kept per
//! metric, where `x = floor((b - m) / (k * l))` for budget `b`, `m`
//! misclassified samples, `k` metrics and `l` classes. The class with the
//! fewest correctly classified samples is kept whole.

mod report;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cnn::{predict_all, Model};
use crate::error::{Error, Result};
use crate::metrics::{score_dataset, MetricConfig, MetricTriple};
use crate::rng::seeded;
use crate::signal::{stratified_allocation, Dataset};

pub use report::{selection_rows, write_coreset_jsonl, write_selection_report, SelectionRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Dtw,
    Mse,
    Slack,
}

impl Metric {
    /// Fixed processing order for without-replacement picking.
    pub const ALL: [Metric; 3] = [Metric::Dtw, Metric::Mse, Metric::Slack];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Dtw => "dtw",
            Metric::Mse => "mse",
            Metric::Slack => "slack",
        }
    }

    pub fn value(self, t: &MetricTriple) -> f64 {
        match self {
            Metric::Dtw => t.dtw,
            Metric::Mse => t.mse,
            Metric::Slack => t.slack,
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dtw" => Ok(Metric::Dtw),
            "mse" => Ok(Metric::Mse),
            "slack" => Ok(Metric::Slack),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

/// Why a sample ended up in the core-set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rationale {
    Incorrect,
    /// 1-based position in the class's ascending order for `metric`.
    Rank { metric: Metric, rank: usize },
    SmallestClassFull,
    Random,
}

impl fmt::Display for Rationale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rationale::Incorrect => f.write_str("incorrect"),
            Rationale::Rank { metric, rank } => write!(f, "{}_rank({rank})", metric.name()),
            Rationale::SmallestClassFull => f.write_str("smallest_class_full"),
            Rationale::Random => f.write_str("random"),
        }
    }
}

impl FromStr for Rationale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "incorrect" => return Ok(Rationale::Incorrect),
            "smallest_class_full" => return Ok(Rationale::SmallestClassFull),
            "random" => return Ok(Rationale::Random),
            _ => {}
        }
        let bad = || Error::Config(format!("unknown rationale {s:?}"));
        let (name, rest) = s.split_once("_rank(").ok_or_else(bad)?;
        let rank = rest.strip_suffix(')').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        Ok(Rationale::Rank {
            metric: name.parse()?,
            rank,
        })
    }
}

impl Serialize for Rationale {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rationale {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Budget bookkeeping for one batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Sample cap, `round(budget_pct * |batch|)`.
    pub b: usize,
    pub budget_pct: f64,
    /// Class count.
    pub l: usize,
    /// Misclassified samples in the batch.
    pub m: usize,
    /// Per-class, per-metric quota.
    pub x: usize,
}

impl Budget {
    pub fn new(budget_pct: f64, batch_len: usize, l: usize, m: usize, metrics: usize) -> Self {
        let b = budget_count(budget_pct, batch_len);
        Budget {
            b,
            budget_pct,
            l,
            m,
            x: quota(b, m, l, metrics),
        }
    }
}

/// `round(budget_pct * n)`, never more than `n`.
pub fn budget_count(budget_pct: f64, n: usize) -> usize {
    ((budget_pct * n as f64).round() as usize).min(n)
}

/// `floor((b - m) / (3 l))`, or 0 when `m >= b`.
pub fn per_class_quota(b: usize, m: usize, l: usize) -> usize {
    quota(b, m, l, 3)
}

/// Quota with the metric count generalized for ablations.
pub fn quota(b: usize, m: usize, l: usize, metrics: usize) -> usize {
    if m >= b || l == 0 || metrics == 0 {
        return 0;
    }
    (b - m) / (metrics * l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    pub budget_pct: f64,
    /// Metrics in use; always processed in dtw, mse, slack order.
    pub metric_set: Vec<Metric>,
    pub metric: MetricConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            budget_pct: 0.5,
            metric_set: Metric::ALL.to_vec(),
            metric: MetricConfig::default(),
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.budget_pct > 0.0 && self.budget_pct <= 1.0) {
            return Err(Error::Config(format!(
                "budget {} not in (0, 1]",
                self.budget_pct
            )));
        }
        if self.metric_set.is_empty() {
            return Err(Error::Config("at least one metric is required".into()));
        }
        let unique: HashSet<_> = self.metric_set.iter().collect();
        if unique.len() != self.metric_set.len() {
            return Err(Error::Config("metrics listed more than once".into()));
        }
        Ok(())
    }

    /// The configured metrics in canonical order.
    pub fn ordered_metrics(&self) -> Vec<Metric> {
        Metric::ALL
            .into_iter()
            .filter(|m| self.metric_set.contains(m))
            .collect()
    }
}

/// Correctly and incorrectly classified parts of a batch.
#[derive(Debug, Clone)]
pub struct Partition {
    pub correct: Dataset,
    pub incorrect: Dataset,
    /// Predicted class of every batch sample, in batch order.
    pub predictions: Vec<usize>,
}

impl Partition {
    /// Per-sample correctness, in batch order.
    pub fn correct_flags(&self, batch: &Dataset) -> Vec<bool> {
        batch
            .signals()
            .iter()
            .zip(&self.predictions)
            .map(|(s, &p)| s.label == p)
            .collect()
    }
}

/// Splits a batch by whether the model's arg-max (lowest index on ties)
/// matches the label.
pub fn partition_by_classification(model: &Model, batch: &Dataset) -> Result<Partition> {
    if model.class_count() != batch.class_count() {
        return Err(Error::Shape(format!(
            "model has {} classes, batch has {}",
            model.class_count(),
            batch.class_count()
        )));
    }
    let predictions = predict_all(model, batch)?;
    let (mut correct, mut incorrect) = (Vec::new(), Vec::new());
    for (s, &p) in batch.signals().iter().zip(&predictions) {
        if s.label == p {
            correct.push(s.clone());
        } else {
            incorrect.push(s.clone());
        }
    }
    Ok(Partition {
        correct: batch.derive(correct)?,
        incorrect: batch.derive(incorrect)?,
        predictions,
    })
}

/// The selected subset of a batch with a reason for every kept sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreSet {
    pub selected: Dataset,
    pub rationale: BTreeMap<String, Rationale>,
    /// Ids left out, in batch order.
    pub rejected_ids: Vec<String>,
    pub budget: Option<Budget>,
    /// Class kept whole, if any class had correctly classified samples.
    pub smallest_class: Option<usize>,
}

impl CoreSet {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.rationale.contains_key(id)
    }
}

/// A core-set together with everything computed on the way.
#[derive(Debug, Clone)]
pub struct Selection {
    pub coreset: CoreSet,
    /// Metric triples for every batch sample, in batch order.
    pub scores: Vec<MetricTriple>,
    pub correct: Vec<bool>,
    pub predictions: Vec<usize>,
}

/// Classifies, scores and selects a core-set from `batch`.
pub fn select_core_set(model: &Model, batch: &Dataset, cfg: &SelectionConfig) -> Result<Selection> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    cfg.validate()?;
    let partition = partition_by_classification(model, batch)?;
    let correct = partition.correct_flags(batch);
    let scores = score_dataset(model, batch, &cfg.metric)?;
    let coreset = select_from_scores(batch, &correct, &scores, cfg)?;
    Ok(Selection {
        coreset,
        scores,
        correct,
        predictions: partition.predictions,
    })
}

/// Selection on precomputed correctness flags and metric triples, both in
/// batch order.
pub fn select_from_scores(
    batch: &Dataset,
    correct: &[bool],
    scores: &[MetricTriple],
    cfg: &SelectionConfig,
) -> Result<CoreSet> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    cfg.validate()?;
    if correct.len() != batch.len() || scores.len() != batch.len() {
        return Err(Error::Shape("scores and flags must cover the whole batch".into()));
    }
    let signals = batch.signals();
    let l = batch.class_count();
    let m = correct.iter().filter(|c| !**c).count();
    let metrics = cfg.ordered_metrics();
    let budget = Budget::new(cfg.budget_pct, batch.len(), l, m, metrics.len());

    let mut rationale: BTreeMap<String, Rationale> = BTreeMap::new();
    for (s, _) in signals.iter().zip(correct).filter(|(_, c)| !**c) {
        rationale.insert(s.id.clone(), Rationale::Incorrect);
    }

    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); l];
    for (i, s) in signals.iter().enumerate() {
        if correct[i] {
            pools[s.label].push(i);
        }
    }
    let smallest_class = (0..l)
        .filter(|&c| !pools[c].is_empty())
        .min_by_key(|&c| (pools[c].len(), c));

    for (class, pool) in pools.iter().enumerate() {
        if Some(class) == smallest_class {
            continue;
        }
        for &metric in &metrics {
            let mut order = pool.clone();
            order.sort_by(|&a, &b| {
                metric
                    .value(&scores[a])
                    .total_cmp(&metric.value(&scores[b]))
                    .then_with(|| signals[a].id.cmp(&signals[b].id))
            });
            let mut taken = 0;
            for (pos, &i) in order.iter().enumerate() {
                if taken == budget.x {
                    break;
                }
                if rationale.contains_key(&signals[i].id) {
                    continue;
                }
                rationale.insert(signals[i].id.clone(), Rationale::Rank { metric, rank: pos + 1 });
                taken += 1;
            }
        }
    }
    if let Some(c) = smallest_class {
        for &i in &pools[c] {
            rationale.insert(signals[i].id.clone(), Rationale::SmallestClassFull);
        }
    }
    assemble(batch, rationale, Some(budget), smallest_class)
}

fn assemble(
    batch: &Dataset,
    rationale: BTreeMap<String, Rationale>,
    budget: Option<Budget>,
    smallest_class: Option<usize>,
) -> Result<CoreSet> {
    let (mut kept, mut rejected_ids) = (Vec::new(), Vec::new());
    for s in batch.signals() {
        if rationale.contains_key(&s.id) {
            kept.push(s.clone());
        } else {
            rejected_ids.push(s.id.clone());
        }
    }
    Ok(CoreSet {
        selected: batch.derive(kept)?,
        rationale,
        rejected_ids,
        budget,
        smallest_class,
    })
}

/// Class-stratified uniform sample of `round(budget_pct * |batch|)` ids.
pub fn random_baseline(batch: &Dataset, budget_pct: f64, seed: u64) -> Result<CoreSet> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !(budget_pct > 0.0 && budget_pct <= 1.0) {
        return Err(Error::Config(format!("budget {budget_pct} not in (0, 1]")));
    }
    let alloc = stratified_allocation(&batch.class_counts(), budget_pct);
    let mut rng = seeded(seed);
    let mut rationale = BTreeMap::new();
    for (class, mut members) in batch.indices_by_class().into_iter().enumerate() {
        members.shuffle(&mut rng);
        for &i in &members[..alloc[class]] {
            rationale.insert(batch.signals()[i].id.clone(), Rationale::Random);
        }
    }
    assemble(batch, rationale, None, None)
}
