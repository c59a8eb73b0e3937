use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use coreset_core::pipeline::paradigm::Paradigm;
use coreset_core::selection::Metric;

use crate::config::{parse_metrics, Overrides};

/// Comma-separated metric names, e.g. `dtw,mse,slack`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricList(pub Vec<Metric>);

impl std::str::FromStr for MetricList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_metrics(s).map(MetricList)
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    s.split(',').map(|p| p.trim().parse::<u64>().map_err(|e| format!("{p:?}: {e}"))).collect()
}

#[derive(Debug, Parser)]
#[command(name = "coreset", version, about = "Core-set selection for 1D CNN signal classifiers")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command. They override the config file.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run config; defaults apply to every key it omits.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Global seed every component seed is derived from.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Selection budget as a fraction of the batch, in (0, 1].
    #[arg(long, global = true, value_name = "FRACTION")]
    pub budget: Option<f64>,
    /// Convolution layer whose feature maps are summarized.
    #[arg(long, global = true, value_name = "INDEX")]
    pub layer: Option<usize>,
    /// Metrics used for selection, e.g. `dtw,mse,slack`.
    #[arg(long, global = true, value_name = "LIST")]
    pub metrics: Option<MetricList>,
    /// Parent directory of the run directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Name of the run directory (default: UTC timestamp).
    #[arg(long, global = true, value_name = "NAME")]
    pub run_name: Option<String>,
}

impl CommonArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            budget: self.budget,
            layer: self.layer,
            metrics: self.metrics.as_ref().map(|m| m.0.clone()),
            out: self.out.clone(),
            run_name: self.run_name.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the asserted train/test split and incoming batches.
    Generate,
    /// Train a model from scratch on an asserted set.
    Train {
        #[arg(long)]
        train: PathBuf,
        /// Evaluate the trained model on this set.
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Select the core-set of one batch.
    Select {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        batch: PathBuf,
    },
    /// Run select, fine-tune and accept/rollback over a stream of batches.
    Iterate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Incoming batch; repeat for a stream, in arrival order.
        #[arg(long, required = true)]
        batch: Vec<PathBuf>,
    },
    /// Evaluate a checkpoint on a test set.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Run one experimental paradigm (P1..P6) over the configured seeds.
    Paradigm {
        name: Paradigm,
        /// Seeds to run, e.g. `1,2,3,4,5`; overrides `--seed`.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Option<Vec<u64>>,
    },
}
