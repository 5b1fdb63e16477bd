//! The `attn-topo` command line: ATTN ingest, persistence diagrams, feature
//! CSVs, training and evaluation.
//!
//! Results go to stdout or to the named output files; progress, the
//! configuration echo and errors go to stderr. Exit codes: 1 usage, 2 data,
//! 3 numeric failure.

mod commands;
mod error;

use std::path::PathBuf;

use attn_topo_core::classifier::TrainParams;
use attn_topo_core::features::{FeatureConfig, HeadSelection};
use clap::{Args, Parser, Subcommand};

pub use commands::run;
pub use error::{CliError, ExitKind};

#[derive(Debug, Parser)]
#[command(
    name = "attn-topo",
    version,
    about = "Persistent homology features of attention maps"
)]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedOptions,
    #[command(subcommand)]
    pub command: Command,
}

/// Options accepted by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct SharedOptions {
    /// Seed for data generation and the train/test split.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for per-sample work (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Heads to use, as `layer:head,...` or `all`.
    #[arg(long, global = true, default_value = "all")]
    pub heads: HeadSelection,
    /// Remove pairs with birth == death before computing statistics.
    #[arg(long, global = true)]
    pub drop_zero_persistence: bool,
    /// L2 regularization strength.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub lambda: f64,
    /// Share of each class used for training.
    #[arg(long, global = true, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Gradient-descent iteration cap.
    #[arg(long, global = true, default_value_t = 2000)]
    pub max_iters: usize,
    /// Stop when the gradient's largest component falls below this.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
}

impl SharedOptions {
    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            heads: self.heads.clone(),
            drop_zero_persistence: self.drop_zero_persistence,
        }
    }

    pub fn train_params(&self, balance_classes: bool) -> TrainParams {
        TrainParams {
            lambda: self.lambda,
            max_iters: self.max_iters,
            tol: self.tol,
            balance_classes,
        }
    }

    /// One-line record of every option, for the run log.
    pub fn echo(&self) -> String {
        format!(
            "seed={} threads={} heads={} drop_zero_persistence={} lambda={} train_fraction={} max_iters={} tol={}",
            self.seed,
            self.threads,
            self.heads,
            self.drop_zero_persistence,
            self.lambda,
            self.train_fraction,
            self.max_iters,
            self.tol
        )
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyOptions {
    /// Probability at or above which a sample is labelled vulnerable.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Weight samples by inverse class frequency during training.
    #[arg(long)]
    pub balance_classes: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic two-class ATTN file.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 400)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        layers: usize,
        #[arg(long, default_value_t = 2)]
        num_heads: usize,
        #[arg(long, default_value_t = 30)]
        tokens: usize,
    },
    /// Check every tensor of an ATTN file and list the violations.
    Validate { input: PathBuf },
    /// Write the persistence diagrams of every selected head.
    Diagrams {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// One `diagrams.txt` instead of one file per sample, head and dimension.
        #[arg(long)]
        consolidated: bool,
    },
    /// Write the feature CSV of an ATTN file.
    Featurize {
        input: PathBuf,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a feature CSV, train on one part and report on the other.
    Train {
        csv: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        classify: ClassifyOptions,
    },
    /// Evaluate a saved model on every row of a feature CSV.
    Eval {
        csv: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Featurize, split, train and evaluate in one run.
    Pipeline {
        input: PathBuf,
        /// Also write the feature CSV here.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Also write the trained model here.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        classify: ClassifyOptions,
    },
}
