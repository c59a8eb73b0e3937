//! Evaluation scenarios P1-P6 on generated data.
//!
//! Every seed builds its own asserted pool (split into the training set of
//! the initial model and the fixed test set), a clean incoming batch and the
//! initial model `M_A`. Seeds run in parallel; each one is deterministic.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rundir::write_json;
use super::{median, run_stream, IterationRecord, PipelineConfig};
use crate::cnn::{
    build_model, evaluate, fine_tune, train, ArchitectureConfig, EvaluationReport, Model,
    TrainingConfig,
};
use crate::error::{Error, Result};
use crate::rng::SeedPlan;
use crate::selection::{random_baseline, select_core_set, Metric, SelectionConfig};
use crate::signal::{
    corrupt_samples, generate_synthetic, split_dataset, CorruptionKind, Dataset, DatasetRole,
    SynthConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Paradigm {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
}

impl Paradigm {
    pub const ALL: [Paradigm; 6] = [
        Paradigm::P1,
        Paradigm::P2,
        Paradigm::P3,
        Paradigm::P4,
        Paradigm::P5,
        Paradigm::P6,
    ];
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Paradigm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Paradigm::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown paradigm {s:?}; expected P1..P6")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Generator settings; its `seed` is replaced per run.
    pub synth: SynthConfig,
    /// Asserted windows per class before the train/test split.
    pub asserted_per_class: usize,
    /// Training share of the asserted pool; the rest is the test set.
    pub train_fraction: f64,
    /// Windows per class in every incoming batch.
    pub batch_per_class: usize,
    pub architecture: ArchitectureConfig,
    /// Used by P6 in place of `architecture`.
    pub architecture_b: ArchitectureConfig,
    /// Training of `M_A` and of the from-scratch models in P1.
    pub train: TrainingConfig,
    pub pipeline: PipelineConfig,
    pub corruption_fraction: f64,
    pub corruption_kinds: Vec<CorruptionKind>,
    /// Corruption of the second, fully corrupted batch in P3.
    pub stream_corruption_kinds: Vec<CorruptionKind>,
    /// Budget of the subset the P1 from-scratch model is trained on.
    pub asserted_budget: f64,
    /// P4 grid.
    pub budgets: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            synth: SynthConfig::default(),
            asserted_per_class: 163,
            train_fraction: 460.0 / 652.0,
            batch_per_class: 115,
            architecture: ArchitectureConfig::a(),
            architecture_b: ArchitectureConfig::b(),
            train: TrainingConfig::default(),
            pipeline: PipelineConfig::default(),
            corruption_fraction: 0.1,
            corruption_kinds: vec![CorruptionKind::AdditiveNoise, CorruptionKind::FlatlineSegment],
            stream_corruption_kinds: vec![
                CorruptionKind::AdditiveNoise,
                CorruptionKind::FlatlineSegment,
                CorruptionKind::LabelFlip,
            ],
            asserted_budget: 0.9,
            budgets: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            seeds: vec![1, 2, 3, 4, 5],
        }
    }
}

impl ScenarioConfig {
    /// Narrow networks and short schedules that finish on one CPU core in
    /// minutes.
    pub fn desk_scale() -> Self {
        let train = TrainingConfig {
            epochs: 40,
            learning_rate: 0.002,
            ..TrainingConfig::default()
        };
        let fine_tune = TrainingConfig {
            epochs: 15,
            learning_rate: 0.002,
            ..TrainingConfig::default()
        };
        ScenarioConfig {
            architecture: ArchitectureConfig::a().with_widths(&[4, 4, 8, 8, 8, 8, 16, 16, 16, 16]),
            architecture_b: ArchitectureConfig::b().with_widths(&[4, 4, 8, 8, 8, 8, 16, 16, 16]),
            train,
            pipeline: PipelineConfig {
                fine_tune,
                ..PipelineConfig::default()
            },
            ..ScenarioConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.train.validate()?;
        self.pipeline.validate()?;
        if self.asserted_per_class < 2 || self.batch_per_class == 0 {
            return Err(Error::Config("asserted pool needs 2 and batches 1 window per class".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!("train fraction {} not in (0, 1)", self.train_fraction)));
        }
        if !(0.0..=1.0).contains(&self.corruption_fraction) {
            return Err(Error::Config(format!(
                "corruption fraction {} not in [0, 1]",
                self.corruption_fraction
            )));
        }
        if self.corruption_fraction > 0.0 && self.corruption_kinds.is_empty() {
            return Err(Error::Config("corruption kinds must not be empty".into()));
        }
        if self.stream_corruption_kinds.is_empty() {
            return Err(Error::Config("stream corruption kinds must not be empty".into()));
        }
        for &b in self.budgets.iter().chain([&self.asserted_budget]) {
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::Config(format!("budget {b} not in (0, 1]")));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let classes = self.synth.classes.len();
        self.architecture.build(self.synth.window_len(), classes)?;
        self.architecture_b.build(self.synth.window_len(), classes)?;
        Ok(())
    }
}

/// Data and initial models shared by every paradigm for one seed.
#[derive(Debug, Clone)]
pub struct SeedSetup {
    pub seed: u64,
    pub asserted: Dataset,
    pub test: Dataset,
    /// Clean incoming batch `S1`.
    pub batch: Dataset,
    /// Untrained network `M_A` starts from.
    pub initial: Model,
    pub model_a: Model,
    pub model_a_report: EvaluationReport,
}

fn with_seed(cfg: &TrainingConfig, seed: u64) -> TrainingConfig {
    TrainingConfig {
        seed,
        ..cfg.clone()
    }
}

fn incoming_batch(cfg: &ScenarioConfig, plan: SeedPlan, k: u64) -> Result<Dataset> {
    let synth = SynthConfig {
        seed: plan.batch(k),
        ..cfg.synth.clone()
    };
    Ok(generate_synthetic(&synth, cfg.batch_per_class, &format!("s{k}-"), DatasetRole::IncomingBatch)?.dataset)
}

/// Generates the data of one seed and trains `M_A` with `architecture`.
pub fn prepare_seed(cfg: &ScenarioConfig, architecture: &ArchitectureConfig, seed: u64) -> Result<SeedSetup> {
    let plan = SeedPlan::new(seed);
    let synth = SynthConfig {
        seed: plan.derive(SeedPlan::ASSERTED),
        ..cfg.synth.clone()
    };
    let pool = generate_synthetic(&synth, cfg.asserted_per_class, "o-", DatasetRole::AssertedPool)?.dataset;
    let (asserted, test) = split_dataset(&pool, cfg.train_fraction, plan.derive(SeedPlan::SPLIT))?;
    let batch = incoming_batch(cfg, plan, 1)?;
    let spec = architecture.build(synth.window_len(), synth.classes.len())?;
    let initial = build_model(&spec, plan.derive(SeedPlan::INIT))?;
    let model_a = train(&initial, &asserted, &with_seed(&cfg.train, plan.derive(SeedPlan::TRAIN)))?.model;
    let model_a_report = evaluate(&model_a, &test)?;
    Ok(SeedSetup {
        seed,
        asserted,
        test,
        batch,
        initial,
        model_a,
        model_a_report,
    })
}

fn fine_tune_seed(cfg: &ScenarioConfig, setup: &SeedSetup) -> TrainingConfig {
    with_seed(&cfg.pipeline.fine_tune, SeedPlan::new(setup.seed).derive(SeedPlan::FINE_TUNE))
}

fn rate(part: usize, whole: usize) -> Option<f64> {
    (whole > 0).then(|| part as f64 / whole as f64)
}

fn medians<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    median(&(0..n).map(f).collect::<Vec<_>>()).unwrap_or(f64::NAN)
}

// ---- P1 ----

/// Per-sample metrics of the corrupted batch, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub id: String,
    pub label: usize,
    pub correct: bool,
    pub corrupted: Option<CorruptionKind>,
    pub selected: bool,
    pub dtw: f64,
    pub mse: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P1SeedResult {
    pub seed: u64,
    pub corrupted_correct: usize,
    pub corrupted_rejected: usize,
    pub clean_correct: usize,
    pub clean_rejected: usize,
    /// `None` when no corrupted sample was classified correctly.
    pub corrupted_rejection_rate: Option<f64>,
    pub clean_rejection_rate: Option<f64>,
    pub subset_size: usize,
    pub subset_corrupted: usize,
    /// From-scratch model on the `asserted_budget` core-set.
    pub subset: EvaluationReport,
    /// From-scratch model on the whole corrupted batch.
    pub full: EvaluationReport,
    pub samples: Vec<ScoredSample>,
}

pub fn p1_seed(cfg: &ScenarioConfig, setup: &SeedSetup) -> Result<P1SeedResult> {
    let plan = SeedPlan::new(setup.seed);
    let (batch, log) = corrupt_samples(
        &setup.batch,
        cfg.corruption_fraction,
        &cfg.corruption_kinds,
        plan.derive(SeedPlan::CORRUPT),
    )?;
    let sel = select_core_set(&setup.model_a, &batch, &cfg.pipeline.selection)?;
    let mut counts = [[0usize; 2]; 2];
    let mut samples = Vec::with_capacity(batch.len());
    for (i, s) in batch.signals().iter().enumerate() {
        let corrupted = log.corrupted.get(&s.id).copied();
        let selected = sel.coreset.contains(&s.id);
        if sel.correct[i] {
            let group = &mut counts[corrupted.is_some() as usize];
            group[0] += 1;
            group[1] += !selected as usize;
        }
        let t = &sel.scores[i];
        samples.push(ScoredSample {
            id: s.id.clone(),
            label: s.label,
            correct: sel.correct[i],
            corrupted,
            selected,
            dtw: t.dtw,
            mse: t.mse,
            slack: t.slack,
        });
    }

    let subset_cfg = SelectionConfig {
        budget_pct: cfg.asserted_budget,
        ..cfg.pipeline.selection.clone()
    };
    let subset = select_core_set(&setup.model_a, &batch, &subset_cfg)?.coreset;
    let scratch = with_seed(&cfg.train, plan.derive(SeedPlan::TRAIN));
    let subset_model = train(&setup.initial, &subset.selected, &scratch)?.model;
    let full_model = train(&setup.initial, &batch, &scratch)?.model;
    let [clean, corrupted] = counts;
    Ok(P1SeedResult {
        seed: setup.seed,
        corrupted_correct: corrupted[0],
        corrupted_rejected: corrupted[1],
        clean_correct: clean[0],
        clean_rejected: clean[1],
        corrupted_rejection_rate: rate(corrupted[1], corrupted[0]),
        clean_rejection_rate: rate(clean[1], clean[0]),
        subset_size: subset.len(),
        subset_corrupted: subset.selected.ids().filter(|id| log.contains(id)).count(),
        subset: evaluate(&subset_model, &setup.test)?,
        full: evaluate(&full_model, &setup.test)?,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P1Report {
    pub seeds: Vec<P1SeedResult>,
    /// Over seeds with a defined rate; `None` if there are none.
    pub median_corrupted_rejection_rate: Option<f64>,
    pub median_clean_rejection_rate: Option<f64>,
    pub median_subset_accuracy: f64,
    pub median_full_accuracy: f64,
}

impl P1Report {
    pub fn from_seeds(seeds: Vec<P1SeedResult>) -> Self {
        let defined = |f: fn(&P1SeedResult) -> Option<f64>| median(&seeds.iter().filter_map(f).collect::<Vec<_>>());
        P1Report {
            median_corrupted_rejection_rate: defined(|r| r.corrupted_rejection_rate),
            median_clean_rejection_rate: defined(|r| r.clean_rejection_rate),
            median_subset_accuracy: medians(seeds.len(), |i| seeds[i].subset.accuracy),
            median_full_accuracy: medians(seeds.len(), |i| seeds[i].full.accuracy),
            seeds,
        }
    }
}

// ---- P2 / P6 ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P2SeedResult {
    pub seed: u64,
    pub model_a: EvaluationReport,
    /// `M_A` fine-tuned on the core-set.
    pub coreset: EvaluationReport,
    /// `M_A` fine-tuned on the whole batch.
    pub control: EvaluationReport,
    /// `M_A` fine-tuned on a class-stratified random subset of equal budget.
    pub random: EvaluationReport,
    pub coreset_size: usize,
    pub random_size: usize,
    pub batch_size: usize,
}

pub fn p2_seed(cfg: &ScenarioConfig, setup: &SeedSetup) -> Result<P2SeedResult> {
    let ft = fine_tune_seed(cfg, setup);
    let sel = select_core_set(&setup.model_a, &setup.batch, &cfg.pipeline.selection)?;
    let random = random_baseline(
        &setup.batch,
        cfg.pipeline.selection.budget_pct,
        SeedPlan::new(setup.seed).derive(SeedPlan::BASELINE),
    )?;
    let tuned = |ds: &Dataset| -> Result<EvaluationReport> {
        if ds.is_empty() {
            return Ok(setup.model_a_report.clone());
        }
        evaluate(&fine_tune(&setup.model_a, ds, &ft)?.model, &setup.test)
    };
    Ok(P2SeedResult {
        seed: setup.seed,
        model_a: setup.model_a_report.clone(),
        coreset: tuned(&sel.coreset.selected)?,
        control: tuned(&setup.batch)?,
        random: tuned(&random.selected)?,
        coreset_size: sel.coreset.len(),
        random_size: random.len(),
        batch_size: setup.batch.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P2Report {
    pub architecture: ArchitectureConfig,
    pub seeds: Vec<P2SeedResult>,
    pub median_model_a_accuracy: f64,
    pub median_coreset_accuracy: f64,
    pub median_control_accuracy: f64,
    pub median_random_accuracy: f64,
}

impl P2Report {
    pub fn from_seeds(architecture: ArchitectureConfig, seeds: Vec<P2SeedResult>) -> Self {
        let n = seeds.len();
        P2Report {
            architecture,
            median_model_a_accuracy: medians(n, |i| seeds[i].model_a.accuracy),
            median_coreset_accuracy: medians(n, |i| seeds[i].coreset.accuracy),
            median_control_accuracy: medians(n, |i| seeds[i].control.accuracy),
            median_random_accuracy: medians(n, |i| seeds[i].random.accuracy),
            seeds,
        }
    }
}

// ---- P3 ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P3SeedResult {
    pub seed: u64,
    /// Clean batch, then a fully corrupted batch.
    pub records: Vec<IterationRecord>,
    /// Full-batch fine-tuning chain over the same batches, always accepted.
    pub control: Vec<EvaluationReport>,
    /// Deployed parameters after the stream equal those after batch 1.
    pub corrupted_batch_left_model_unchanged: bool,
}

pub fn p3_seed(cfg: &ScenarioConfig, setup: &SeedSetup) -> Result<P3SeedResult> {
    let plan = SeedPlan::new(setup.seed);
    let second = incoming_batch(cfg, plan, 2)?;
    let (bad, _) = corrupt_samples(&second, 1.0, &cfg.stream_corruption_kinds, plan.derive(SeedPlan::CORRUPT) + 1)?;
    let batches = [setup.batch.clone(), bad];
    let pipeline = PipelineConfig {
        fine_tune: fine_tune_seed(cfg, setup),
        ..cfg.pipeline.clone()
    };
    let stream = run_stream(&setup.model_a, &batches, &setup.test, &pipeline)?;

    let mut control = Vec::with_capacity(batches.len());
    let mut model = setup.model_a.clone();
    for (k, b) in batches.iter().enumerate() {
        let ft = with_seed(&pipeline.fine_tune, pipeline.fine_tune.seed.wrapping_add(k as u64 + 1));
        model = fine_tune(&model, b, &ft)?.model;
        control.push(evaluate(&model, &setup.test)?);
    }
    let unchanged = stream.model.params() == stream.iterations[0].model.params();
    Ok(P3SeedResult {
        seed: setup.seed,
        records: stream.records(),
        control,
        corrupted_batch_left_model_unchanged: unchanged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P3Report {
    pub seeds: Vec<P3SeedResult>,
}

// ---- P4 / P5 ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub budget_pct: f64,
    pub metric_set: Vec<Metric>,
    pub report: EvaluationReport,
    pub coreset_size: usize,
}

/// Median accuracy of one grid point over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub budget_pct: f64,
    pub metric_set: Vec<Metric>,
    pub median_accuracy: f64,
}

fn sweep_seed(cfg: &ScenarioConfig, setup: &SeedSetup, grid: &[SelectionConfig]) -> Result<Vec<SweepRow>> {
    let ft = fine_tune_seed(cfg, setup);
    grid.iter()
        .map(|sel_cfg| {
            let sel = select_core_set(&setup.model_a, &setup.batch, sel_cfg)?;
            let report = if sel.coreset.is_empty() {
                setup.model_a_report.clone()
            } else {
                evaluate(&fine_tune(&setup.model_a, &sel.coreset.selected, &ft)?.model, &setup.test)?
            };
            Ok(SweepRow {
                seed: setup.seed,
                budget_pct: sel_cfg.budget_pct,
                metric_set: sel_cfg.ordered_metrics(),
                report,
                coreset_size: sel.coreset.len(),
            })
        })
        .collect()
}

fn budget_grid(cfg: &ScenarioConfig) -> Vec<SelectionConfig> {
    cfg.budgets
        .iter()
        .map(|&b| SelectionConfig {
            budget_pct: b,
            ..cfg.pipeline.selection.clone()
        })
        .collect()
}

/// The three two-metric subsets, dropping slack, mse and dtw in turn.
pub fn ablation_sets() -> Vec<Vec<Metric>> {
    vec![
        vec![Metric::Dtw, Metric::Mse],
        vec![Metric::Dtw, Metric::Slack],
        vec![Metric::Mse, Metric::Slack],
    ]
}

fn ablation_grid(cfg: &ScenarioConfig) -> Vec<SelectionConfig> {
    ablation_sets()
        .into_iter()
        .map(|metric_set| SelectionConfig {
            metric_set,
            ..cfg.pipeline.selection.clone()
        })
        .collect()
}

pub fn p4_seed(cfg: &ScenarioConfig, setup: &SeedSetup) -> Result<Vec<SweepRow>> {
    sweep_seed(cfg, setup, &budget_grid(cfg))
}

pub fn p5_seed(cfg: &ScenarioConfig, setup: &SeedSetup) -> Result<Vec<SweepRow>> {
    sweep_seed(cfg, setup, &ablation_grid(cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub points: Vec<SweepPoint>,
    /// Median accuracy never decreases along the budget grid (P4 only).
    pub monotone: Option<bool>,
}

impl SweepReport {
    pub fn from_rows(rows: Vec<SweepRow>, grid: &[SelectionConfig], check_monotone: bool) -> Self {
        let points: Vec<SweepPoint> = grid
            .iter()
            .map(|g| {
                let metric_set = g.ordered_metrics();
                let acc: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.budget_pct == g.budget_pct && r.metric_set == metric_set)
                    .map(|r| r.report.accuracy)
                    .collect();
                SweepPoint {
                    budget_pct: g.budget_pct,
                    metric_set,
                    median_accuracy: median(&acc).unwrap_or(f64::NAN),
                }
            })
            .collect();
        let monotone = check_monotone.then(|| {
            points
                .windows(2)
                .all(|w| w[1].median_accuracy >= w[0].median_accuracy)
        });
        SweepReport {
            rows,
            points,
            monotone,
        }
    }
}

// ---- driver ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "paradigm")]
pub enum ParadigmReport {
    P1(P1Report),
    P2(P2Report),
    P3(P3Report),
    P4(SweepReport),
    P5(SweepReport),
    P6(P2Report),
}

fn per_seed<T: Send>(
    cfg: &ScenarioConfig,
    architecture: &ArchitectureConfig,
    f: impl Fn(&SeedSetup) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    cfg.seeds
        .par_iter()
        .map(|&s| f(&prepare_seed(cfg, architecture, s)?))
        .collect()
}

/// Runs one paradigm over `cfg.seeds` and, if `out` is given, writes
/// `report.json` and plot-ready CSV files there.
pub fn run_paradigm(paradigm: Paradigm, cfg: &ScenarioConfig, out: Option<&Path>) -> Result<ParadigmReport> {
    cfg.validate()?;
    let arch = &cfg.architecture;
    let report = match paradigm {
        Paradigm::P1 => ParadigmReport::P1(P1Report::from_seeds(per_seed(cfg, arch, |s| p1_seed(cfg, s))?)),
        Paradigm::P2 => ParadigmReport::P2(P2Report::from_seeds(arch.clone(), per_seed(cfg, arch, |s| p2_seed(cfg, s))?)),
        Paradigm::P3 => ParadigmReport::P3(P3Report {
            seeds: per_seed(cfg, arch, |s| p3_seed(cfg, s))?,
        }),
        Paradigm::P4 => {
            let rows = per_seed(cfg, arch, |s| p4_seed(cfg, s))?.concat();
            ParadigmReport::P4(SweepReport::from_rows(rows, &budget_grid(cfg), true))
        }
        Paradigm::P5 => {
            let rows = per_seed(cfg, arch, |s| p5_seed(cfg, s))?.concat();
            ParadigmReport::P5(SweepReport::from_rows(rows, &ablation_grid(cfg), false))
        }
        Paradigm::P6 => {
            let b = &cfg.architecture_b;
            ParadigmReport::P6(P2Report::from_seeds(b.clone(), per_seed(cfg, b, |s| p2_seed(cfg, s))?))
        }
    };
    if let Some(dir) = out {
        write_paradigm(dir, &report)?;
    }
    Ok(report)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| x.to_string())
}

fn kind_name(k: Option<CorruptionKind>) -> &'static str {
    match k {
        None => "clean",
        Some(CorruptionKind::AdditiveNoise) => "additive_noise",
        Some(CorruptionKind::FlatlineSegment) => "flatline_segment",
        Some(CorruptionKind::LabelFlip) => "label_flip",
    }
}

fn metrics_label(set: &[Metric]) -> String {
    set.iter().map(|m| m.name()).collect::<Vec<_>>().join("+")
}

/// Writes `report.json` plus the paradigm's CSV tables into `dir`.
pub fn write_paradigm(dir: &Path, report: &ParadigmReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("report.json"), report)?;
    let rows: Vec<(&str, Vec<Vec<String>>)> = match report {
        ParadigmReport::P1(r) => {
            let mut summary = vec![vec![
                "seed", "corrupted_correct", "corrupted_rejected", "corrupted_rejection_rate",
                "clean_correct", "clean_rejected", "clean_rejection_rate", "subset_size",
                "subset_corrupted", "subset_accuracy", "full_accuracy",
            ]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()];
            let mut samples = vec![["seed", "id", "label", "correct", "corruption", "selected", "dtw", "mse", "slack"]
                .map(String::from)
                .to_vec()];
            for s in &r.seeds {
                summary.push(vec![
                    s.seed.to_string(),
                    s.corrupted_correct.to_string(),
                    s.corrupted_rejected.to_string(),
                    opt(s.corrupted_rejection_rate),
                    s.clean_correct.to_string(),
                    s.clean_rejected.to_string(),
                    opt(s.clean_rejection_rate),
                    s.subset_size.to_string(),
                    s.subset_corrupted.to_string(),
                    s.subset.accuracy.to_string(),
                    s.full.accuracy.to_string(),
                ]);
                for x in &s.samples {
                    samples.push(vec![
                        s.seed.to_string(),
                        x.id.clone(),
                        x.label.to_string(),
                        x.correct.to_string(),
                        kind_name(x.corrupted).to_string(),
                        x.selected.to_string(),
                        x.dtw.to_string(),
                        x.mse.to_string(),
                        x.slack.to_string(),
                    ]);
                }
            }
            vec![("p1_rejection.csv", summary), ("p1_metric_distribution.csv", samples)]
        }
        ParadigmReport::P2(r) | ParadigmReport::P6(r) => {
            let mut t = vec![["seed", "model", "accuracy", "macro_precision", "macro_recall", "train_size"]
                .map(String::from)
                .to_vec()];
            for s in &r.seeds {
                for (name, rep, n) in [
                    ("model_a", &s.model_a, 0),
                    ("coreset", &s.coreset, s.coreset_size),
                    ("control", &s.control, s.batch_size),
                    ("random", &s.random, s.random_size),
                ] {
                    t.push(vec![
                        s.seed.to_string(),
                        name.to_string(),
                        rep.accuracy.to_string(),
                        rep.macro_precision.to_string(),
                        rep.macro_recall.to_string(),
                        n.to_string(),
                    ]);
                }
            }
            vec![("comparison.csv", t)]
        }
        ParadigmReport::P3(r) => {
            let mut t = vec![[
                "seed", "batch", "before_accuracy", "after_accuracy", "accepted", "coreset_size",
                "control_accuracy",
            ]
            .map(String::from)
            .to_vec()];
            for s in &r.seeds {
                for (rec, ctl) in s.records.iter().zip(&s.control) {
                    t.push(vec![
                        s.seed.to_string(),
                        rec.batch_id.clone(),
                        rec.before.accuracy.to_string(),
                        rec.after.accuracy.to_string(),
                        rec.accepted.to_string(),
                        rec.coreset_size.to_string(),
                        ctl.accuracy.to_string(),
                    ]);
                }
            }
            vec![("stream.csv", t)]
        }
        ParadigmReport::P4(r) | ParadigmReport::P5(r) => {
            let mut t = vec![[
                "seed", "budget_pct", "metric_set", "accuracy", "macro_precision", "macro_recall",
                "coreset_size",
            ]
            .map(String::from)
            .to_vec()];
            for row in &r.rows {
                t.push(vec![
                    row.seed.to_string(),
                    row.budget_pct.to_string(),
                    metrics_label(&row.metric_set),
                    row.report.accuracy.to_string(),
                    row.report.macro_precision.to_string(),
                    row.report.macro_recall.to_string(),
                    row.coreset_size.to_string(),
                ]);
            }
            let mut m = vec![["budget_pct", "metric_set", "median_accuracy"].map(String::from).to_vec()];
            for p in &r.points {
                m.push(vec![
                    p.budget_pct.to_string(),
                    metrics_label(&p.metric_set),
                    p.median_accuracy.to_string(),
                ]);
            }
            vec![("sweep.csv", t), ("sweep_median.csv", m)]
        }
    };
    for (name, table) in rows {
        let path = dir.join(name);
        let mut w = csv_writer(&path)?;
        for rec in table {
            w.write_record(&rec).map_err(|e| csv_error(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
