//! The pipeline steps behind each subcommand. Each reads and writes files in an
//! output directory using the fixed names below.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use super::config::{RunConfig, SvdChoice};
use super::dataset_file::{read_dataset, write_dataset};
use super::model_file::{read_basis, read_model, write_basis, write_model, ModelFile};
use crate::analysis::{bound_report, estimate_m_big_m, ErrorReport};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{column_norms, select_pod_dim, tail_energy, PodBasis, SvdMethod};
use crate::neural::TrainLog;
use crate::rom::train_model;
use crate::solvers::build_dataset;

pub const TRAIN_FILE: &str = "train.podrom";
pub const TEST_FILE: &str = "test.podrom";
pub const BASIS_FILE: &str = "basis.podbas";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const MODEL_FILE: &str = "model.podmdl";
pub const LOG_FILE: &str = "train_log.csv";
pub const EVAL_FILE: &str = "eval.csv";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => TRAIN_FILE,
            Split::Test => TEST_FILE,
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub struct GenerateSummary {
    pub path: PathBuf,
    pub n_h: usize,
    pub n_data: usize,
    pub min_norm: f64,
    pub max_norm: f64,
}

impl fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "wrote {}: N_h={} N_data={} min_norm={:.6e} max_norm={:.6e}",
            self.path.display(),
            self.n_h,
            self.n_data,
            self.min_norm,
            self.max_norm
        )
    }
}

/// Builds the training or test snapshot set of `cfg` and writes it to `out/<split>.podrom`.
pub fn cmd_generate(cfg: &RunConfig, split: Split, out: &Path) -> Result<GenerateSummary> {
    ensure_dir(out)?;
    let spec = cfg.problem.spec();
    let (n_s, n_t, seed) = match split {
        Split::Train => (cfg.data.n_s, cfg.data.n_t, cfg.train_seed()),
        Split::Test => (cfg.data.test_n_s, cfg.data.test_n_t, cfg.test_seed()),
    };
    let set = build_dataset(&spec, n_s, n_t, seed)?;
    let path = out.join(split.file_name());
    write_dataset(&path, &set)?;
    let norms = column_norms(&set.u);
    Ok(GenerateSummary {
        path,
        n_h: set.n_h(),
        n_data: set.n_data(),
        min_norm: norms.iter().copied().fold(f64::INFINITY, f64::min),
        max_norm: norms.iter().copied().fold(0.0, f64::max),
    })
}

pub struct PodSummary {
    pub basis: PodBasis,
    /// Dimension requested by the config or selected from `eps`, before clamping.
    pub requested: usize,
    /// `m` used by eps-mode selection.
    pub m: Option<f64>,
}

impl fmt::Display for PodSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "POD basis: N={} (requested {})", self.basis.n, self.requested)?;
        if let Some(m) = self.m {
            write!(f, " m={m:.6e}")?;
        }
        write!(f, " tail={:.6e}", self.basis.tail())
    }
}

fn write_spectrum(path: &Path, sigma2: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "sigma2", "cumulative_tail"])?;
    for (i, s) in sigma2.iter().enumerate() {
        let k = i + 1;
        w.write_record([k.to_string(), s.to_string(), tail_energy(sigma2, k)?.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Computes the POD basis of `dataset`, either with `cfg.pod.n` modes or with the
/// smallest dimension meeting `cfg.pod.eps`. Writes the basis and its spectrum.
pub fn cmd_pod(cfg: &RunConfig, dataset: &Path, m_override: Option<f64>, out: &Path) -> Result<PodSummary> {
    ensure_dir(out)?;
    let set = read_dataset(dataset)?;
    let max_modes = set.n_h().min(set.n_data());
    let (requested, m) = match cfg.pod.eps {
        Some(eps) => {
            let m = match m_override {
                Some(m) => m,
                None => estimate_m_big_m(&[&set.u])?.0,
            };
            // selection needs the whole spectrum, which only the thin SVD provides
            let full = PodBasis::from_snapshots(&set.u, set.domain_volume, 1, SvdMethod::Thin)?;
            let choice = select_pod_dim(&full.sigma2, m, eps)?;
            if !choice.reachable {
                warn!("eps = {eps} is not reachable with the available snapshots; using N = {}", choice.n);
            }
            (choice.n.max(1), Some(m))
        }
        None => (cfg.pod.n, None),
    };
    if requested == 0 {
        return Err(Error::Config("POD dimension must be at least 1".into()));
    }
    let mut n = requested;
    if n > max_modes {
        warn!("requested N = {n} exceeds the snapshot rank bound {max_modes}; clamping");
        n = max_modes;
    }
    if let SvdChoice::Randomized = cfg.pod.svd {
        let limit = max_modes.saturating_sub(cfg.pod.oversampling);
        if n > limit {
            return Err(Error::Config(format!(
                "randomized SVD with oversampling {} supports at most N = {limit} here",
                cfg.pod.oversampling
            )));
        }
    }
    let basis = PodBasis::from_snapshots(&set.u, set.domain_volume, n, cfg.pod.method(cfg.seed))?;
    write_basis(&out.join(BASIS_FILE), &basis)?;
    write_spectrum(&out.join(SPECTRUM_FILE), &basis.sigma2)?;
    Ok(PodSummary { basis, requested, m })
}

fn write_log(path: &Path, log: &TrainLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for rec in &log.records {
        w.serialize(rec)?;
    }
    if log.records.is_empty() {
        w.write_record(["epoch", "train_loss", "val_loss", "lr"])?;
    }
    w.flush()?;
    Ok(())
}

pub struct TrainSummary {
    pub model: ModelFile,
    pub log: TrainLog,
}

impl fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trained {}: epochs={} best_epoch={} best_val={:.6e} active_weights={}",
            self.model.model.family(),
            self.log.records.len(),
            self.log.best_epoch,
            self.log.best_val,
            self.model.model.active_weights()
        )
    }
}

/// Trains `cfg.family` on a dataset and basis; writes the model and its log CSV.
pub fn cmd_train(cfg: &RunConfig, dataset: &Path, basis: &Path, out: &Path) -> Result<TrainSummary> {
    ensure_dir(out)?;
    let set = read_dataset(dataset)?;
    let basis = read_basis(basis)?;
    let (model, log) = train_model(cfg.family, &set, &basis, &cfg.arch, &cfg.train)?;
    let mf = ModelFile {
        model,
        train: cfg.train.clone(),
        arch: cfg.arch.clone(),
    };
    write_model(&out.join(MODEL_FILE), &mf)?;
    write_log(&out.join(LOG_FILE), &log)?;
    info!("training stopped after {} epochs", log.records.len());
    Ok(TrainSummary { model: mf, log })
}

/// One evaluation row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "n")]
    pub n_latent: usize,
    pub active_weights: usize,
    #[serde(rename = "E_R")]
    pub e_r: f64,
    #[serde(rename = "E_S")]
    pub e_s: f64,
    #[serde(rename = "E_POD")]
    pub e_pod: f64,
    #[serde(rename = "E_NN")]
    pub e_nn: f64,
    #[serde(rename = "tilde_E_POD")]
    pub tilde_e_pod: f64,
    pub lower: f64,
    pub upper: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub seeds: String,
}

impl EvalRow {
    pub fn new(report: &ErrorReport, n_latent: usize, active_weights: usize, seeds: String) -> Self {
        Self {
            n: report.n,
            n_latent,
            active_weights,
            e_r: report.e_r,
            e_s: report.e_s,
            e_pod: report.e_pod,
            e_nn: report.e_nn,
            tilde_e_pod: report.tilde_e_pod,
            lower: report.lower_bound,
            upper: report.upper_bound,
            m: report.m,
            big_m: report.big_m,
            seeds,
        }
    }

    pub fn sandwich_holds(&self) -> bool {
        self.lower <= self.e_r && self.e_r <= self.upper
    }
}

pub fn seeds_label(cfg: &RunConfig) -> String {
    format!("data={};test={};train={}", cfg.train_seed(), cfg.test_seed(), cfg.train.seed)
}

/// Evaluates a model on a test set; `m`, `M` are scanned over train ∪ test.
pub fn cmd_eval(cfg: &RunConfig, model: &Path, train: &Path, test: &Path, out: &Path) -> Result<EvalRow> {
    ensure_dir(out)?;
    let mf = read_model(model)?;
    let train = read_dataset(train)?;
    let test = read_dataset(test)?;
    let n_h = mf.model.basis().n_h();
    for (name, set) in [("training", &train), ("test", &test)] {
        if set.n_h() != n_h {
            return dim_err(format!("model has N_h = {n_h} but the {name} set has N_h = {}", set.n_h()));
        }
    }
    let report = bound_report(&mf.model, &train, &test)?;
    let row = EvalRow::new(
        &report,
        mf.model.latent_dim().unwrap_or(0),
        mf.model.active_weights(),
        seeds_label(cfg),
    );
    let mut w = csv::Writer::from_path(out.join(EVAL_FILE))?;
    w.serialize(&row)?;
    w.flush()?;
    Ok(row)
}

/// Writes the resolved config, then generate → pod → train → eval in `out`.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<EvalRow> {
    ensure_dir(out)?;
    fs::write(out.join(CONFIG_FILE), cfg.to_toml()?)?;
    // log macros skip their arguments when disabled, so each step runs outside them
    for split in [Split::Train, Split::Test] {
        let g = cmd_generate(cfg, split, out)?;
        info!("{g}");
    }
    let pod = cmd_pod(cfg, &out.join(TRAIN_FILE), None, out)?;
    info!("{pod}");
    let trained = cmd_train(cfg, &out.join(TRAIN_FILE), &out.join(BASIS_FILE), out)?;
    info!("{trained}");
    cmd_eval(cfg, &out.join(MODEL_FILE), &out.join(TRAIN_FILE), &out.join(TEST_FILE), out)
}
