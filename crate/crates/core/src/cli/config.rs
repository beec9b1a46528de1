//! Run configuration: one TOML file plus `--set key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SvdMethod;
use crate::neural::TrainConfig;
use crate::rom::{ArchConfig, Family};
use crate::solvers::{ProblemKind, ProblemSpec};

/// Offset between the training and test dataset seeds.
pub const TEST_SEED_OFFSET: u64 = 1_000_003;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SvdChoice {
    Thin,
    Randomized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemName {
    Benchmark,
    Heat1d,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemName,
    /// Regularity exponent of the benchmark.
    pub beta: f64,
    /// Grid nodes; 0 picks the problem default.
    pub n_h: usize,
    /// Heat solver steps over `[0, T]`; 0 picks the default.
    pub time_steps: usize,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            kind: ProblemName::Heat1d,
            beta: 3.0,
            n_h: 0,
            time_steps: 0,
        }
    }
}

impl ProblemConfig {
    pub fn spec(&self) -> ProblemSpec {
        let mut spec = match self.kind {
            ProblemName::Benchmark => ProblemSpec::benchmark(self.beta),
            ProblemName::Heat1d => ProblemSpec::heat1d(),
        };
        if self.n_h > 0 {
            spec.n_h = self.n_h;
        }
        if self.time_steps > 0 && matches!(spec.kind, ProblemKind::Heat1d) {
            spec.time_steps = self.time_steps;
        }
        spec
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub n_s: usize,
    pub n_t: usize,
    pub test_n_s: usize,
    pub test_n_t: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            n_s: 50,
            n_t: 20,
            test_n_s: 100,
            test_n_t: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PodConfig {
    /// Retained modes; ignored when `eps` is set.
    pub n: usize,
    /// Target accuracy for the selection rule.
    pub eps: Option<f64>,
    pub svd: SvdChoice,
    pub oversampling: usize,
    pub power_iters: usize,
}

impl Default for PodConfig {
    fn default() -> Self {
        Self {
            n: 20,
            eps: None,
            svd: SvdChoice::Thin,
            oversampling: 10,
            power_iters: 2,
        }
    }
}

impl PodConfig {
    pub fn method(&self, seed: u64) -> SvdMethod {
        match self.svd {
            SvdChoice::Thin => SvdMethod::Thin,
            SvdChoice::Randomized => SvdMethod::Randomized {
                oversampling: self.oversampling,
                power_iters: self.power_iters,
                seed,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// POD dimensions of the sampling sweeps.
    pub sampling_n: Vec<usize>,
    pub ns_grid: Vec<usize>,
    pub ns_fixed_nt: usize,
    pub nt_grid: Vec<usize>,
    pub nt_fixed_ns: usize,
    pub replicates: usize,
    /// Training seeds per point of the complexity sweep.
    pub train_replicates: usize,
    /// POD dimensions of the decay and bounds sweeps.
    pub pod_n: Vec<usize>,
    /// Hidden widths of the complexity sweep.
    pub widths: Vec<usize>,
    pub families: Vec<Family>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sampling_n: vec![5, 20],
            ns_grid: (1..=7).map(|k| 1 << k).collect(),
            ns_fixed_nt: 1000,
            nt_grid: (3..=9).map(|k| 1 << k).collect(),
            nt_fixed_ns: 100,
            replicates: 5,
            train_replicates: 3,
            pod_n: vec![1, 2, 4, 8, 16, 32],
            widths: vec![5, 10, 20],
            families: vec![Family::PodDlRom, Family::LinResnet],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub problem: ProblemConfig,
    pub data: DataConfig,
    pub pod: PodConfig,
    pub family: Family,
    pub arch: ArchConfig,
    pub train: TrainConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            problem: ProblemConfig::default(),
            data: DataConfig::default(),
            pod: PodConfig::default(),
            family: Family::PodDlRom,
            arch: ArchConfig::default(),
            train: TrainConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn train_seed(&self) -> u64 {
        self.seed
    }

    pub fn test_seed(&self) -> u64 {
        self.seed.wrapping_add(TEST_SEED_OFFSET)
    }

    /// Parses TOML text and applies `key=value` overrides (dotted keys address tables).
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut root: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut root, ov)?;
        }
        let cfg: RunConfig = root.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.problem.spec().validate()?;
        cfg.train.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)?,
            None => String::new(),
        };
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(root: &mut toml::Table, ov: &str) -> Result<()> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{ov}' is not of the form key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key '{key}'")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key '{key}' descends into a non-table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c = RunConfig::from_toml_with_overrides("", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let c = RunConfig::from_toml_with_overrides(
            "seed = 3\n[train]\nlr = 0.01\n",
            &[
                "train.batch=7".into(),
                "family=pod-dnn".into(),
                "problem.kind=benchmark".into(),
                "problem.beta=1.5".into(),
                "sweep.widths=[4, 8]".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.train.lr, 0.01);
        assert_eq!(c.train.batch, 7);
        assert_eq!(c.family, Family::PodDnn);
        assert_eq!(c.problem.spec(), ProblemSpec::benchmark(1.5));
        assert_eq!(c.sweep.widths, vec![4, 8]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_toml_with_overrides("bogus = 1", &[]).is_err());
        assert!(RunConfig::from_toml_with_overrides("", &["train.batch=0".into()]).is_err());
        assert!(RunConfig::from_toml_with_overrides("", &["family=cnn".into()]).is_err());
        assert!(RunConfig::from_toml_with_overrides("", &["nokey".into()]).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::default();
        c.pod.eps = Some(0.01);
        c.train.lr = 3e-4;
        let back = RunConfig::from_toml_with_overrides(&c.to_toml().unwrap(), &[]).unwrap();
        assert_eq!(back, c);
    }
}
