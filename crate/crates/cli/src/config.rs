use std::path::{Path, PathBuf};

use coreset_core::cnn::{ArchitectureConfig, TrainingConfig};
use coreset_core::pipeline::paradigm::ScenarioConfig;
use coreset_core::pipeline::PipelineConfig;
use coreset_core::selection::Metric;
use coreset_core::signal::{CorruptionKind, DataFormat, SynthConfig};
use coreset_core::{Error, Result, SeedPlan};
use serde::{Deserialize, Serialize};

/// Synthetic data layout shared by `generate`, dataset loading and the
/// paradigm scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub synth: SynthConfig,
    pub asserted_per_class: usize,
    pub train_fraction: f64,
    pub batch_per_class: usize,
    /// Incoming batches written by `generate`.
    pub batches: usize,
    /// Share of every generated batch that is corrupted.
    pub corruption_fraction: f64,
    pub corruption_kinds: Vec<CorruptionKind>,
    pub format: DataFormat,
}

impl Default for DataConfig {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        DataConfig {
            synth: s.synth,
            asserted_per_class: s.asserted_per_class,
            train_fraction: s.train_fraction,
            batch_per_class: s.batch_per_class,
            batches: 1,
            corruption_fraction: 0.0,
            corruption_kinds: s.corruption_kinds,
            format: DataFormat::Jsonl,
        }
    }
}

/// Paradigm-only knobs; everything else comes from the rest of the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParadigmConfig {
    pub seeds: Vec<u64>,
    pub architecture_b: ArchitectureConfig,
    pub corruption_fraction: f64,
    pub stream_corruption_kinds: Vec<CorruptionKind>,
    pub asserted_budget: f64,
    pub budgets: Vec<f64>,
}

impl Default for ParadigmConfig {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        ParadigmConfig {
            seeds: s.seeds,
            architecture_b: s.architecture_b,
            corruption_fraction: s.corruption_fraction,
            stream_corruption_kinds: s.stream_corruption_kinds,
            asserted_budget: s.asserted_budget,
            budgets: s.budgets,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Global seed; every component seed is derived from it.
    pub seed: u64,
    /// Parent of the run directory.
    pub out: PathBuf,
    /// Run directory name; a UTC timestamp when absent.
    pub run_name: Option<String>,
    pub data: DataConfig,
    pub architecture: ArchitectureConfig,
    pub training: TrainingConfig,
    pub pipeline: PipelineConfig,
    pub paradigm: ParadigmConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("runs"),
            run_name: None,
            data: DataConfig::default(),
            architecture: ArchitectureConfig::a(),
            training: TrainingConfig::default(),
            pipeline: PipelineConfig::default(),
            paradigm: ParadigmConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<f64>,
    pub layer: Option<usize>,
    pub metrics: Option<Vec<Metric>>,
    pub out: Option<PathBuf>,
    pub run_name: Option<String>,
}

pub fn parse_metrics(s: &str) -> std::result::Result<Vec<Metric>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<Metric>().map_err(|e| e.to_string()))
        .collect()
}

impl RunConfig {
    /// Parses a JSON config. Unknown keys and type errors are config errors.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
            self.paradigm.seeds = vec![seed];
        }
        if let Some(b) = o.budget {
            self.pipeline.selection.budget_pct = b;
        }
        if let Some(layer) = o.layer {
            self.pipeline.selection.metric.layer = Some(layer);
        }
        if let Some(m) = &o.metrics {
            self.pipeline.selection.metric_set = m.clone();
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(name) = &o.run_name {
            self.run_name = Some(name.clone());
        }
    }

    /// Fills in the run name and fans the global seed out to every
    /// component. The result is what gets written next to the outputs.
    pub fn resolve(mut self) -> Self {
        let plan = SeedPlan::new(self.seed);
        self.data.synth.seed = plan.derive(SeedPlan::ASSERTED);
        self.training.seed = plan.derive(SeedPlan::TRAIN);
        self.pipeline.fine_tune.seed = plan.derive(SeedPlan::FINE_TUNE);
        if self.run_name.is_none() {
            self.run_name = Some(chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string());
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        self.scenario().validate()?;
        let d = &self.data;
        if !(0.0..=1.0).contains(&d.corruption_fraction) {
            return Err(Error::Config(format!(
                "corruption fraction {} not in [0, 1]",
                d.corruption_fraction
            )));
        }
        if d.corruption_fraction > 0.0 && d.corruption_kinds.is_empty() {
            return Err(Error::Config("corruption kinds must not be empty".into()));
        }
        match self.run_name.as_deref() {
            Some("") => Err(Error::Config("run name must not be empty".into())),
            Some(n) if n.contains(['/', '\\']) || n == "." || n == ".." => {
                Err(Error::Config(format!("run name {n:?} must be a plain directory name")))
            }
            _ => Ok(()),
        }
    }

    /// The paradigm scenario described by this config.
    pub fn scenario(&self) -> ScenarioConfig {
        let p = &self.paradigm;
        ScenarioConfig {
            synth: self.data.synth.clone(),
            asserted_per_class: self.data.asserted_per_class,
            train_fraction: self.data.train_fraction,
            batch_per_class: self.data.batch_per_class,
            architecture: self.architecture.clone(),
            architecture_b: p.architecture_b.clone(),
            train: self.training.clone(),
            pipeline: self.pipeline.clone(),
            corruption_fraction: p.corruption_fraction,
            corruption_kinds: self.data.corruption_kinds.clone(),
            stream_corruption_kinds: p.stream_corruption_kinds.clone(),
            asserted_budget: p.asserted_budget,
            budgets: p.budgets.clone(),
            seeds: p.seeds.clone(),
        }
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out.join(self.run_name.as_deref().unwrap_or("run"))
    }
}
