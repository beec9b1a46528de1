//! Command-line front end: argument parsing, run configuration, file formats and
//! the experiment drivers.

pub mod codec;
pub mod commands;
pub mod config;
pub mod dataset_file;
pub mod model_file;
pub mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Result;
use commands::{Split, BASIS_FILE, MODEL_FILE, TEST_FILE, TRAIN_FILE};
use config::{RunConfig, SvdChoice};
use sweep::SweepKind;

#[derive(Parser, Debug)]
#[command(name = "poddlrom", version, about = "POD-DL-ROM pipeline and error-analysis sweeps")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config entry, e.g. `--set train.lr=1e-4` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Base seed; replaces `seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Parallel sweep width.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// SVD algorithm for the POD basis; replaces `pod.svd`.
    #[arg(long, global = true, value_enum)]
    pub svd: Option<SvdChoice>,
}

impl Common {
    pub fn load_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref(), &self.overrides)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(svd) = self.svd {
            cfg.pod.svd = svd;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the configured problem and write a snapshot file.
    Generate {
        #[arg(long, value_enum, default_value = "train")]
        split: Split,
    },
    /// Compute a POD basis and its spectrum.
    Pod {
        /// Snapshot file (default: <out>/train.podrom).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Norm lower bound for eps-mode selection (default: scanned from the dataset).
        #[arg(long)]
        m: Option<f64>,
    },
    /// Train the configured model family.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        basis: Option<PathBuf>,
    },
    /// Evaluate a model and write one error-report row.
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// generate, pod, train and eval in one go.
    Run,
    /// Run one of the experiment grids.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
    },
    /// Print the resolved configuration as TOML.
    ShowConfig,
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.common.load_config()?;
    let out = &cli.common.out;
    let or_out = |p: &Option<PathBuf>, name: &str| p.clone().unwrap_or_else(|| out.join(name));
    match &cli.command {
        Command::Generate { split } => println!("{}", commands::cmd_generate(&cfg, *split, out)?),
        Command::Pod { dataset, m } => {
            println!("{}", commands::cmd_pod(&cfg, &or_out(dataset, TRAIN_FILE), *m, out)?)
        }
        Command::Train { dataset, basis } => println!(
            "{}",
            commands::cmd_train(&cfg, &or_out(dataset, TRAIN_FILE), &or_out(basis, BASIS_FILE), out)?
        ),
        Command::Eval { model, train, test } => {
            let row = commands::cmd_eval(
                &cfg,
                &or_out(model, MODEL_FILE),
                &or_out(train, TRAIN_FILE),
                &or_out(test, TEST_FILE),
                out,
            )?;
            println!("{row:?}");
        }
        Command::Run => {
            let row = commands::cmd_run(&cfg, out)?;
            println!("{row:?}");
        }
        Command::Sweep { kind } => {
            let res = sweep::cmd_sweep(*kind, &cfg, out, cli.common.threads)?;
            println!("{} new rows in {}", res.new_rows, res.csv.display());
            for l in &res.lines {
                println!("{} {}: slope {:.4} (r2 {:.3}, {} points)", l.sweep, l.group, l.slope, l.r_squared, l.points);
            }
        }
        Command::ShowConfig => print!("{}", cfg.to_toml()?),
    }
    Ok(())
}
