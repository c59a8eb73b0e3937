use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassLabel, Dataset, DatasetRole, Provenance, Signal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<DataFormat> {
        match path.extension()?.to_str()? {
            "csv" => Some(DataFormat::Csv),
            "jsonl" | "ndjson" => Some(DataFormat::Jsonl),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Number of classes; inferred as `max label + 1` when absent.
    pub class_count: Option<usize>,
    pub class_names: Option<Vec<String>>,
    pub sampling_rate: f64,
    /// Provenance for rows that do not carry one (every CSV row).
    pub provenance: Provenance,
    pub role: DatasetRole,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            class_count: None,
            class_names: None,
            sampling_rate: 40.0,
            provenance: Provenance::NonAsserted,
            role: DatasetRole::IncomingBatch,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonRow {
    id: String,
    label: usize,
    samples: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

/// Ground-truth R-peak positions of one synthetic signal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakRecord {
    pub id: String,
    pub r_peaks: Vec<usize>,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn load_dataset(path: &Path, format: DataFormat, opts: &LoadOptions) -> Result<Dataset> {
    let signals = match format {
        DataFormat::Csv => read_csv(path, opts)?,
        DataFormat::Jsonl => read_jsonl(path, opts)?,
    };
    let class_count = match (opts.class_count, &opts.class_names) {
        (Some(n), _) => n,
        (None, Some(names)) => names.len(),
        (None, None) => signals.iter().map(|s| s.label + 1).max().unwrap_or(1),
    };
    for s in &signals {
        if s.label >= class_count {
            return Err(Error::Label {
                id: s.id.clone(),
                label: s.label,
                class_count,
            });
        }
    }
    let classes = match &opts.class_names {
        Some(names) if names.len() == class_count => ClassLabel::from_names(names),
        Some(names) => {
            return Err(Error::Config(format!(
                "{} class names given for {class_count} classes",
                names.len()
            )))
        }
        None => ClassLabel::generic(class_count),
    };
    Dataset::new(signals, classes, opts.role)
}

fn read_csv(path: &Path, opts: &LoadOptions) -> Result<Vec<Signal>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    if headers.len() < 3 || &headers[0] != "id" || &headers[1] != "label" {
        return Err(parse_error(path, 1, "expected header id,label,s0,..."));
    }
    let mut signals = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() < 3 {
            return Err(parse_error(path, line, "row has no samples"));
        }
        let id = record[0].trim().to_string();
        let label: usize = record[1]
            .trim()
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad label {:?}", &record[1])))?;
        let mut samples = Vec::with_capacity(record.len() - 2);
        for field in record.iter().skip(2) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_error(path, line, format!("bad sample value {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_error(path, line, format!("non-finite sample {field:?}")));
            }
            samples.push(v);
        }
        signals.push(Signal::new(id, samples, opts.sampling_rate, label, opts.provenance));
    }
    Ok(signals)
}

fn read_jsonl(path: &Path, opts: &LoadOptions) -> Result<Vec<Signal>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut signals = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(&line)
            .map_err(|e| parse_error(path, line_no, e.to_string()))?;
        if row.samples.iter().any(|v| !v.is_finite()) {
            return Err(parse_error(path, line_no, "non-finite sample"));
        }
        signals.push(Signal::new(
            row.id,
            row.samples,
            opts.sampling_rate,
            row.label,
            row.provenance.unwrap_or(opts.provenance),
        ));
    }
    Ok(signals)
}

pub fn save_dataset(ds: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    match format {
        DataFormat::Csv => {
            let len = ds.signal_len().unwrap_or(0);
            let mut header = String::from("id,label");
            for i in 0..len {
                header.push_str(&format!(",s{i}"));
            }
            writeln!(out, "{header}").map_err(io_err)?;
            for s in ds.signals() {
                write!(out, "{},{}", s.id, s.label).map_err(io_err)?;
                for v in &s.samples {
                    write!(out, ",{v}").map_err(io_err)?;
                }
                writeln!(out).map_err(io_err)?;
            }
        }
        DataFormat::Jsonl => {
            for s in ds.signals() {
                let row = JsonRow {
                    id: s.id.clone(),
                    label: s.label,
                    samples: s.samples.clone(),
                    provenance: Some(s.provenance),
                };
                serde_json::to_writer(&mut out, &row)?;
                writeln!(out).map_err(io_err)?;
            }
        }
    }
    out.flush().map_err(io_err)
}

pub fn save_peak_sidecar(records: &[PeakRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_peak_sidecar(path: &Path) -> Result<Vec<PeakRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| parse_error(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}
