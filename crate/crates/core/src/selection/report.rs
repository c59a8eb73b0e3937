use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CoreSet, Selection};
use crate::error::{Error, Result};
use crate::signal::Dataset;

/// One line of the per-sample selection report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub id: String,
    pub selected: bool,
    /// Rationale for kept samples, `"rejected"` otherwise.
    pub rationale: String,
    pub dtw: f64,
    pub mse: f64,
    pub slack: f64,
    pub class: usize,
}

pub fn selection_rows(batch: &Dataset, selection: &Selection) -> Vec<SelectionRow> {
    rows(batch, &selection.coreset, selection)
}

fn rows(batch: &Dataset, coreset: &CoreSet, selection: &Selection) -> Vec<SelectionRow> {
    batch
        .signals()
        .iter()
        .zip(&selection.scores)
        .map(|(s, t)| {
            let reason = coreset.rationale.get(&s.id);
            SelectionRow {
                id: s.id.clone(),
                selected: reason.is_some(),
                rationale: reason.map_or_else(|| "rejected".to_string(), |r| r.to_string()),
                dtw: t.dtw,
                mse: t.mse,
                slack: t.slack,
                class: s.label,
            }
        })
        .collect()
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = &'a SelectionRow>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        writeln!(out).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Every batch sample, selected or not, in batch order.
pub fn write_selection_report(path: &Path, batch: &Dataset, selection: &Selection) -> Result<()> {
    write_rows(path, selection_rows(batch, selection).iter())
}

/// Only the selected samples, in batch order.
pub fn write_coreset_jsonl(path: &Path, batch: &Dataset, selection: &Selection) -> Result<()> {
    let rows = selection_rows(batch, selection);
    write_rows(path, rows.iter().filter(|r| r.selected))
}
