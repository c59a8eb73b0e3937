//! Command-line front end: config handling and the six subcommands.
//!
//! Every command validates its config and loads its inputs before it touches
//! the output directory, then writes the resolved config as `config.json`
//! next to its outputs.

mod args;
mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use coreset_core::cnn::{build_model, evaluate, load_checkpoint, save_checkpoint, train, EvaluationReport, Model};
use coreset_core::metrics::write_metric_dump;
use coreset_core::pipeline::paradigm::{run_paradigm, Paradigm, ParadigmReport};
use coreset_core::pipeline::{run_stream, write_iteration, write_stream_summary, RunDirectory, StreamSummary};
use coreset_core::selection::{select_core_set, write_coreset_jsonl, write_selection_report, Budget};
use coreset_core::signal::{
    corrupt_samples, generate_synthetic, load_dataset, save_dataset, save_peak_sidecar, split_dataset, DataFormat,
    Dataset, DatasetRole, LoadOptions, SynthConfig,
};
use coreset_core::{Error, Result, SeedPlan};
use serde::Serialize;

pub use args::{Cli, Command, MetricList};
pub use config::{parse_metrics, DataConfig, Overrides, ParadigmConfig, RunConfig};

/// Loads, overrides, resolves and validates the config for one invocation.
pub fn resolve_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(overrides);
    let cfg = cfg.resolve();
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command line; returns the run directory.
pub fn run(cli: &Cli) -> Result<PathBuf> {
    let cfg = resolve_config(cli.common.config.as_deref(), &cli.common.overrides())?;
    match &cli.command {
        Command::Generate => cmd_generate(&cfg),
        Command::Train { train, test } => cmd_train(&cfg, train, test.as_deref()),
        Command::Select { checkpoint, batch } => cmd_select(&cfg, checkpoint, batch),
        Command::Iterate { checkpoint, test, batch } => cmd_iterate(&cfg, checkpoint, test, batch),
        Command::Evaluate { checkpoint, test } => cmd_evaluate(&cfg, checkpoint, test),
        Command::Paradigm { name, seeds } => {
            let mut cfg = cfg;
            if let Some(s) = seeds {
                cfg.paradigm.seeds = s.clone();
            }
            cmd_paradigm(&cfg, *name)
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

/// Creates the run directory, refusing to reuse a non-empty one, and
/// writes the resolved config into it.
fn open_run(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.run_dir();
    if fs::read_dir(&dir).is_ok_and(|mut d| d.next().is_some()) {
        return Err(Error::Config(format!("run directory {} is not empty", dir.display())));
    }
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_json(&dir.join("config.json"), cfg)?;
    Ok(dir)
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        })
    }
}

fn format_of(path: &Path) -> Result<DataFormat> {
    DataFormat::from_path(path)
        .ok_or_else(|| Error::Config(format!("{}: expected a .csv or .jsonl file", path.display())))
}

/// Loads a dataset over `classes` classes, naming them after the generator
/// classes when the counts agree.
fn load(path: &Path, cfg: &RunConfig, classes: usize, role: DatasetRole) -> Result<Dataset> {
    require_file(path)?;
    let synth = &cfg.data.synth;
    let names = (synth.classes.len() == classes).then(|| synth.classes.iter().map(|c| c.name.clone()).collect());
    let opts = LoadOptions {
        class_count: Some(classes),
        class_names: names,
        sampling_rate: synth.sampling_rate,
        role,
        ..LoadOptions::default()
    };
    load_dataset(path, format_of(path)?, &opts)
}

fn load_model(path: &Path) -> Result<Model> {
    require_file(path)?;
    load_checkpoint(path)
}

fn ext(format: DataFormat) -> &'static str {
    match format {
        DataFormat::Csv => "csv",
        DataFormat::Jsonl => "jsonl",
    }
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<PathBuf> {
    let d = &cfg.data;
    let plan = SeedPlan::new(cfg.seed);
    let pool = generate_synthetic(&d.synth, d.asserted_per_class, "o-", DatasetRole::AssertedPool)?;
    let (train_set, test_set) = split_dataset(&pool.dataset, d.train_fraction, plan.derive(SeedPlan::SPLIT))?;
    let mut peaks = pool.peaks;
    let mut batches = Vec::with_capacity(d.batches);
    for k in 1..=d.batches as u64 {
        let synth = SynthConfig {
            seed: plan.batch(k),
            ..d.synth.clone()
        };
        let generated = generate_synthetic(&synth, d.batch_per_class, &format!("s{k}-"), DatasetRole::IncomingBatch)?;
        peaks.extend(generated.peaks);
        let batch = if d.corruption_fraction > 0.0 {
            let seed = plan.derive(SeedPlan::CORRUPT) + k;
            Some(corrupt_samples(&generated.dataset, d.corruption_fraction, &d.corruption_kinds, seed)?)
        } else {
            None
        };
        batches.push(batch.unwrap_or((generated.dataset, Default::default())));
    }

    let dir = open_run(cfg)?;
    let e = ext(d.format);
    save_dataset(&train_set, &dir.join(format!("train.{e}")), d.format)?;
    save_dataset(&test_set, &dir.join(format!("test.{e}")), d.format)?;
    for (k, (batch, log)) in batches.iter().enumerate() {
        save_dataset(batch, &dir.join(format!("batch_{}.{e}", k + 1)), d.format)?;
        if !log.is_empty() {
            write_json(&dir.join(format!("batch_{}_corruption.json", k + 1)), log)?;
        }
    }
    save_peak_sidecar(&peaks, &dir.join("peaks.jsonl"))?;
    println!(
        "generated {} train, {} test and {} batch(es) of {} in {}",
        train_set.len(),
        test_set.len(),
        batches.len(),
        d.batch_per_class * d.synth.classes.len(),
        dir.display()
    );
    Ok(dir)
}

#[derive(Serialize)]
struct TrainingSummary {
    param_count: usize,
    epoch_losses: Vec<f64>,
    test: Option<EvaluationReport>,
}

pub fn cmd_train(cfg: &RunConfig, train_path: &Path, test_path: Option<&Path>) -> Result<PathBuf> {
    let classes = cfg.data.synth.classes.len();
    let train_set = load(train_path, cfg, classes, DatasetRole::AssertedPool)?;
    let test_set = test_path
        .map(|p| load(p, cfg, classes, DatasetRole::TestSet))
        .transpose()?;
    let len = train_set.signal_len().ok_or(Error::EmptyInput("training set"))?;
    let spec = cfg.architecture.build(len, classes)?;
    let initial = build_model(&spec, SeedPlan::new(cfg.seed).derive(SeedPlan::INIT))?;

    let dir = open_run(cfg)?;
    let trained = train(&initial, &train_set, &cfg.training)?;
    save_checkpoint(&trained.model, &dir.join("checkpoint.json"))?;
    let test = test_set.map(|t| evaluate(&trained.model, &t)).transpose()?;
    if let Some(r) = &test {
        println!("test accuracy {:.4} over {} samples", r.accuracy, r.total);
    }
    let summary = TrainingSummary {
        param_count: trained.model.param_count(),
        epoch_losses: trained.epoch_losses,
        test,
    };
    write_json(&dir.join("training.json"), &summary)?;
    println!("checkpoint written to {}", dir.join("checkpoint.json").display());
    Ok(dir)
}

#[derive(Serialize)]
struct SelectionSummary {
    batch_size: usize,
    selected: usize,
    rejected: usize,
    budget: Option<Budget>,
    smallest_class: Option<usize>,
}

pub fn cmd_select(cfg: &RunConfig, checkpoint: &Path, batch_path: &Path) -> Result<PathBuf> {
    let model = load_model(checkpoint)?;
    let batch = load(batch_path, cfg, model.class_count(), DatasetRole::IncomingBatch)?;
    let dir = open_run(cfg)?;
    let sel = select_core_set(&model, &batch, &cfg.pipeline.selection)?;
    write_coreset_jsonl(&dir.join("coreset.jsonl"), &batch, &sel)?;
    write_selection_report(&dir.join("selection.jsonl"), &batch, &sel)?;
    write_metric_dump(&dir.join("metrics.csv"), &batch, &sel.scores, &sel.correct)?;
    let c = &sel.coreset;
    write_json(
        &dir.join("selection.json"),
        &SelectionSummary {
            batch_size: batch.len(),
            selected: c.len(),
            rejected: c.rejected_ids.len(),
            budget: c.budget,
            smallest_class: c.smallest_class,
        },
    )?;
    println!("selected {} of {} samples into {}", c.len(), batch.len(), dir.display());
    Ok(dir)
}

pub fn cmd_iterate(cfg: &RunConfig, checkpoint: &Path, test_path: &Path, batch_paths: &[PathBuf]) -> Result<PathBuf> {
    let model = load_model(checkpoint)?;
    let classes = model.class_count();
    let test = load(test_path, cfg, classes, DatasetRole::TestSet)?;
    let batches = batch_paths
        .iter()
        .map(|p| load(p, cfg, classes, DatasetRole::IncomingBatch))
        .collect::<Result<Vec<_>>>()?;
    for b in &batches {
        coreset_core::pipeline::check_disjoint(&test, b)?;
    }
    let dir = open_run(cfg)?;
    let run = RunDirectory::create(&dir)?;
    let stream = run_stream(&model, &batches, &test, &cfg.pipeline)?;
    for (k, (batch, outcome)) in batches.iter().zip(&stream.iterations).enumerate() {
        write_iteration(&run, k + 1, batch, outcome)?;
        let r = &outcome.record;
        println!(
            "{}: {} of {} kept, accuracy {:.4} -> {:.4}, {}",
            r.batch_id,
            r.coreset_size,
            r.batch_size,
            r.before.accuracy,
            r.after.accuracy,
            if r.accepted { "accepted" } else { "rolled back" }
        );
    }
    write_stream_summary(&run, &StreamSummary::from_records(stream.records()))?;
    save_checkpoint(&stream.model, &dir.join("checkpoint.json"))?;
    Ok(dir)
}

pub fn cmd_evaluate(cfg: &RunConfig, checkpoint: &Path, test_path: &Path) -> Result<PathBuf> {
    let model = load_model(checkpoint)?;
    let test = load(test_path, cfg, model.class_count(), DatasetRole::TestSet)?;
    let dir = open_run(cfg)?;
    let report = evaluate(&model, &test)?;
    write_json(&dir.join("report.json"), &report)?;
    println!(
        "accuracy {:.4}, macro precision {:.4}, macro recall {:.4} over {} samples",
        report.accuracy, report.macro_precision, report.macro_recall, report.total
    );
    Ok(dir)
}

pub fn cmd_paradigm(cfg: &RunConfig, paradigm: Paradigm) -> Result<PathBuf> {
    let scenario = cfg.scenario();
    scenario.validate()?;
    let dir = open_run(cfg)?;
    let report = run_paradigm(paradigm, &scenario, Some(&dir))?;
    match &report {
        ParadigmReport::P1(r) => println!(
            "P1 median rejection: corrupted {}, clean {}; subset {:.4} vs full {:.4}",
            rate(r.median_corrupted_rejection_rate),
            rate(r.median_clean_rejection_rate),
            r.median_subset_accuracy,
            r.median_full_accuracy
        ),
        ParadigmReport::P2(r) | ParadigmReport::P6(r) => println!(
            "{paradigm} median accuracy: M_A {:.4}, core-set {:.4}, control {:.4}, random {:.4}",
            r.median_model_a_accuracy, r.median_coreset_accuracy, r.median_control_accuracy, r.median_random_accuracy
        ),
        ParadigmReport::P3(r) => {
            let kept = r.seeds.iter().filter(|s| s.corrupted_batch_left_model_unchanged).count();
            println!("P3 corrupted batch left the model unchanged in {kept} of {} seeds", r.seeds.len());
        }
        ParadigmReport::P4(r) | ParadigmReport::P5(r) => {
            for p in &r.points {
                let metrics: Vec<_> = p.metric_set.iter().map(|m| m.name()).collect();
                println!(
                    "{paradigm} budget {} metrics {}: median accuracy {:.4}",
                    p.budget_pct,
                    metrics.join("+"),
                    p.median_accuracy
                );
            }
        }
    }
    println!("reports written to {}", dir.display());
    Ok(dir)
}

fn rate(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.3}"))
}
