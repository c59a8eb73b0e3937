//! Stream orchestration: for every incoming batch, select a core-set with
//! the deployed model, fine-tune a copy on it, evaluate both on a fixed test
//! set and keep or roll back the update.

pub mod paradigm;
mod rundir;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::cnn::{evaluate, fine_tune, EvaluationReport, Model, TrainingConfig};
use crate::error::{Error, Result};
use crate::selection::{select_core_set, Selection, SelectionConfig};
use crate::signal::Dataset;

pub use rundir::{write_iteration, write_stream_summary, RunDirectory, StreamSummary};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RollbackPolicy {
    AlwaysAccept,
    /// Keep the previous model when test accuracy drops.
    #[default]
    RejectOnAccuracyDrop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub selection: SelectionConfig,
    pub fine_tune: TrainingConfig,
    pub rollback: RollbackPolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            selection: SelectionConfig::default(),
            fine_tune: TrainingConfig {
                epochs: 20,
                ..TrainingConfig::default()
            },
            rollback: RollbackPolicy::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.selection.validate()?;
        self.fine_tune.validate()
    }
}

/// Before/after evaluation of one batch and the deployment decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub batch_id: String,
    pub before: EvaluationReport,
    pub after: EvaluationReport,
    pub coreset_size: usize,
    pub batch_size: usize,
    pub budget_pct: f64,
    pub accepted: bool,
    pub rejected_sample_ids: Vec<String>,
}

/// Everything one iteration produced.
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    /// The fine-tuned model if accepted, otherwise the input model.
    pub model: Model,
    pub record: IterationRecord,
    pub selection: Selection,
}

/// Fails if any sample id occurs in both the test set and the batch.
pub fn check_disjoint(test: &Dataset, batch: &Dataset) -> Result<()> {
    let ids: HashSet<&str> = test.ids().collect();
    match batch.ids().find(|id| ids.contains(id)) {
        Some(id) => Err(Error::Dataset(format!("sample {id:?} is in both the test set and a batch"))),
        None => Ok(()),
    }
}

/// One select, fine-tune, evaluate, accept-or-rollback step. The fine-tune
/// seed is `cfg.fine_tune.seed`.
pub fn run_iteration(
    model: &Model,
    batch: &Dataset,
    batch_id: &str,
    test: &Dataset,
    cfg: &PipelineConfig,
) -> Result<IterationOutcome> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    cfg.validate()?;
    check_disjoint(test, batch)?;
    let before = evaluate(model, test)?;
    let selection = select_core_set(model, batch, &cfg.selection)?;
    let coreset = &selection.coreset;

    let (candidate, after) = if coreset.is_empty() {
        (model.clone(), before.clone())
    } else {
        let tuned = fine_tune(model, &coreset.selected, &cfg.fine_tune)?.model;
        let after = evaluate(&tuned, test)?;
        (tuned, after)
    };
    let accepted = match cfg.rollback {
        RollbackPolicy::AlwaysAccept => true,
        RollbackPolicy::RejectOnAccuracyDrop => after.accuracy >= before.accuracy,
    };
    let record = IterationRecord {
        batch_id: batch_id.to_string(),
        before,
        after,
        coreset_size: coreset.len(),
        batch_size: batch.len(),
        budget_pct: cfg.selection.budget_pct,
        accepted,
        rejected_sample_ids: coreset.rejected_ids.clone(),
    };
    Ok(IterationOutcome {
        model: if accepted { candidate } else { model.clone() },
        record,
        selection,
    })
}

/// Result of folding [`run_iteration`] over a stream.
#[derive(Debug, Clone)]
pub struct StreamOutcome {
    /// The last accepted model.
    pub model: Model,
    pub iterations: Vec<IterationOutcome>,
}

impl StreamOutcome {
    pub fn records(&self) -> Vec<IterationRecord> {
        self.iterations.iter().map(|o| o.record.clone()).collect()
    }
}

/// Runs the batches in order. Batch `k` (1-based) is fine-tuned with seed
/// `cfg.fine_tune.seed + k` and named `batch_<k>`.
pub fn run_stream(model0: &Model, batches: &[Dataset], test: &Dataset, cfg: &PipelineConfig) -> Result<StreamOutcome> {
    cfg.validate()?;
    for b in batches {
        check_disjoint(test, b)?;
    }
    let mut model = model0.clone();
    let mut iterations = Vec::with_capacity(batches.len());
    for (k, batch) in batches.iter().enumerate() {
        let mut step = cfg.clone();
        step.fine_tune.seed = cfg.fine_tune.seed.wrapping_add(k as u64 + 1);
        let outcome = run_iteration(&model, batch, &format!("batch_{}", k + 1), test, &step)?;
        model = outcome.model.clone();
        iterations.push(outcome);
    }
    Ok(StreamOutcome { model, iterations })
}

/// Median of a non-empty slice; the mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}
