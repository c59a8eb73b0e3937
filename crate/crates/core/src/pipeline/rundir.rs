use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{IterationOutcome, IterationRecord};
use crate::cnn::save_checkpoint;
use crate::error::{Error, Result};
use crate::metrics::write_metric_dump;
use crate::selection::{write_coreset_jsonl, write_selection_report};
use crate::signal::Dataset;

/// Root of one run: `iteration_<k>/` subdirectories plus `stream.json`.
#[derive(Debug, Clone)]
pub struct RunDirectory {
    root: PathBuf,
}

impl RunDirectory {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(RunDirectory { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn iteration_dir(&self, k: usize) -> PathBuf {
        self.root.join(format!("iteration_{k}"))
    }
}

/// Aggregate of a whole stream, written as `stream.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub iterations: usize,
    pub accepted: usize,
    pub initial_accuracy: Option<f64>,
    pub final_accuracy: Option<f64>,
    pub records: Vec<IterationRecord>,
}

impl StreamSummary {
    pub fn from_records(records: Vec<IterationRecord>) -> Self {
        let final_accuracy = records.last().map(|r| {
            if r.accepted {
                r.after.accuracy
            } else {
                r.before.accuracy
            }
        });
        StreamSummary {
            iterations: records.len(),
            accepted: records.iter().filter(|r| r.accepted).count(),
            initial_accuracy: records.first().map(|r| r.before.accuracy),
            final_accuracy,
            records,
        }
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes `iteration_<k>/` with `coreset.jsonl` (selected samples),
/// `selection.jsonl` (every sample), `metrics.csv`, `report.json` and the
/// deployed model's `checkpoint.json`.
pub fn write_iteration(run: &RunDirectory, k: usize, batch: &Dataset, outcome: &IterationOutcome) -> Result<PathBuf> {
    let dir = run.iteration_dir(k);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let sel = &outcome.selection;
    write_coreset_jsonl(&dir.join("coreset.jsonl"), batch, sel)?;
    write_selection_report(&dir.join("selection.jsonl"), batch, sel)?;
    write_metric_dump(&dir.join("metrics.csv"), batch, &sel.scores, &sel.correct)?;
    write_json(&dir.join("report.json"), &outcome.record)?;
    save_checkpoint(&outcome.model, &dir.join("checkpoint.json"))?;
    Ok(dir)
}

pub fn write_stream_summary(run: &RunDirectory, summary: &StreamSummary) -> Result<PathBuf> {
    let path = run.root.join("stream.json");
    write_json(&path, summary)?;
    Ok(path)
}
