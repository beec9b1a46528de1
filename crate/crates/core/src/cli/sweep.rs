//! Experiment drivers. Each sweep writes a long-form CSV (one row per run) to
//! `out/sweep_<kind>.csv` and a slope summary to `out/sweep_<kind>_summary.csv`.
//! Rows already present in the CSV are skipped, so an interrupted sweep resumes
//! where it stopped.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use rayon::prelude::*;

use super::commands::ensure_dir;
use super::config::RunConfig;
use crate::analysis::{bound_report, estimate_m_big_m, fit_loglog_slope, pod_error, relative_error, sampling_error};
use crate::error::{Error, Result};
use crate::linalg::{PodBasis, SvdMethod};
use crate::neural::TrainConfig;
use crate::rom::{init_dl_rom, train_model, ArchConfig, Family};
use crate::solvers::{build_dataset, ProblemSpec, SnapshotSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum SweepKind {
    #[value(name = "sampling-Ns")]
    SamplingNs,
    #[value(name = "sampling-Nt")]
    SamplingNt,
    PodDecay,
    Complexity,
    Bounds,
}

impl SweepKind {
    pub fn tag(self) -> &'static str {
        match self {
            SweepKind::SamplingNs => "sampling-Ns",
            SweepKind::SamplingNt => "sampling-Nt",
            SweepKind::PodDecay => "pod-decay",
            SweepKind::Complexity => "complexity",
            SweepKind::Bounds => "bounds",
        }
    }

    fn code(self) -> u64 {
        match self {
            SweepKind::SamplingNs => 1,
            SweepKind::SamplingNt => 2,
            SweepKind::PodDecay => 3,
            SweepKind::Complexity => 4,
            SweepKind::Bounds => 5,
        }
    }

    /// Column names; the first `key_len` columns identify a run.
    pub fn header(self) -> &'static [&'static str] {
        match self {
            SweepKind::SamplingNs | SweepKind::SamplingNt => {
                &["sweep", "N", "N_s", "N_t", "replicate", "seed", "E_S", "E_POD", "m"]
            }
            SweepKind::PodDecay => &["sweep", "N", "N_s", "N_t", "replicate", "seed", "E_POD", "m"],
            SweepKind::Complexity => &[
                "sweep",
                "family",
                "width",
                "replicate",
                "seed",
                "active_weights",
                "E_R",
                "epochs",
                "best_val",
            ],
            SweepKind::Bounds => &[
                "sweep",
                "N",
                "n",
                "seed",
                "active_weights",
                "E_R",
                "E_S",
                "E_POD",
                "E_NN",
                "tilde_E_POD",
                "lower",
                "upper",
                "m",
                "M",
            ],
        }
    }

    fn key_len(self) -> usize {
        match self {
            SweepKind::SamplingNs | SweepKind::SamplingNt | SweepKind::PodDecay => 5,
            SweepKind::Complexity => 4,
            SweepKind::Bounds => 2,
        }
    }

    pub fn csv_path(self, out: &Path) -> PathBuf {
        out.join(format!("sweep_{}.csv", self.tag()))
    }

    pub fn summary_path(self, out: &Path) -> PathBuf {
        out.join(format!("sweep_{}_summary.csv", self.tag()))
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SweepKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            SweepKind::SamplingNs,
            SweepKind::SamplingNt,
            SweepKind::PodDecay,
            SweepKind::Complexity,
            SweepKind::Bounds,
        ]
        .into_iter()
        .find(|k| k.tag() == s)
        .ok_or_else(|| Error::Config(format!("unknown sweep kind '{s}'")))
    }
}

/// splitmix64 finalizer over a sequence of words.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for &p in parts {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(p);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

type Row = Vec<String>;

/// Serialized appender for one sweep CSV.
struct SweepWriter {
    kind: SweepKind,
    done: HashSet<Row>,
    writer: csv::Writer<File>,
}

impl SweepWriter {
    fn open(kind: SweepKind, path: &Path) -> Result<Self> {
        let header: Vec<String> = kind.header().iter().map(|s| s.to_string()).collect();
        let mut done = HashSet::new();
        let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
        if !fresh {
            let mut rdr = csv::Reader::from_path(path)?;
            let existing: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
            if existing != header {
                return Err(Error::Format(format!(
                    "{} has header {:?}, expected {:?}",
                    path.display(),
                    existing,
                    header
                )));
            }
            for rec in rdr.records() {
                let rec = rec?;
                done.insert(rec.iter().take(kind.key_len()).map(str::to_string).collect());
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if fresh {
            writer.write_record(&header)?;
            writer.flush()?;
        }
        Ok(Self { kind, done, writer })
    }

    fn key(&self, row: &[String]) -> Row {
        row[..self.kind.key_len()].to_vec()
    }

    fn is_done(&self, key: &Row) -> bool {
        self.done.contains(key)
    }

    /// Appends `row` unless its key is already present; returns whether it was written.
    fn push(&mut self, row: Row) -> Result<bool> {
        let key = self.key(&row);
        if !self.done.insert(key) {
            return Ok(false);
        }
        self.writer.write_record(&row)?;
        self.writer.flush()?;
        Ok(true)
    }
}

/// Runs `tasks` in parallel chunks of `threads`, writing rows in task order.
/// `keys` lists the row keys a task would produce so finished tasks are skipped.
fn run_tasks<T, K, F>(writer: &mut SweepWriter, tasks: &[T], threads: usize, keys: K, exec: F) -> Result<usize>
where
    T: Sync,
    K: Fn(&T) -> Vec<Row>,
    F: Fn(&T) -> Result<Vec<Row>> + Sync,
{
    let pending: Vec<&T> = tasks
        .iter()
        .filter(|t| keys(t).iter().any(|k| !writer.is_done(k)))
        .collect();
    info!("{} of {} sweep tasks pending", pending.len(), tasks.len());
    let width = threads.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(width)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
    let mut written = 0;
    for chunk in pending.chunks(width) {
        let results: Vec<Result<Vec<Row>>> = pool.install(|| chunk.par_iter().map(|t| exec(t)).collect());
        for res in results {
            for row in res? {
                if writer.push(row)? {
                    written += 1;
                }
            }
        }
    }
    Ok(written)
}

fn fmt_f(x: f64) -> String {
    format!("{x:e}")
}

/// Standard held-out set of the configured problem.
fn test_set(cfg: &RunConfig, spec: &ProblemSpec) -> Result<SnapshotSet> {
    build_dataset(spec, cfg.data.test_n_s, cfg.data.test_n_t, cfg.test_seed())
}

fn full_basis(set: &SnapshotSet, n_max: usize) -> Result<PodBasis> {
    let n = n_max.min(set.n_h()).min(set.n_data());
    PodBasis::from_snapshots(&set.u, set.domain_volume, n, SvdMethod::Thin)
}

struct SamplingTask {
    n_s: usize,
    n_t: usize,
    replicate: usize,
    seed: u64,
}

fn sampling_sweep(cfg: &RunConfig, kind: SweepKind, writer: &mut SweepWriter, threads: usize) -> Result<usize> {
    let sw = &cfg.sweep;
    if sw.sampling_n.is_empty() || sw.replicates == 0 {
        return Err(Error::Config("sampling sweeps need sweep.sampling_n and sweep.replicates".into()));
    }
    let spec = cfg.problem.spec();
    let grid: Vec<(usize, usize)> = match kind {
        SweepKind::SamplingNs => sw.ns_grid.iter().map(|&s| (s, sw.ns_fixed_nt)).collect(),
        _ => sw.nt_grid.iter().map(|&t| (sw.nt_fixed_ns, t)).collect(),
    };
    let mut tasks = Vec::new();
    for (gi, &(n_s, n_t)) in grid.iter().enumerate() {
        for replicate in 0..sw.replicates {
            let seed = derive_seed(cfg.seed, &[kind.code(), gi as u64, replicate as u64]);
            tasks.push(SamplingTask {
                n_s,
                n_t,
                replicate,
                seed,
            });
        }
    }
    let test = test_set(cfg, &spec)?;
    let n_max = sw.sampling_n.iter().copied().max().unwrap_or(1);
    let keys = |t: &SamplingTask| -> Vec<Row> {
        sw.sampling_n
            .iter()
            .map(|n| vec![kind.tag().into(), n.to_string(), t.n_s.to_string(), t.n_t.to_string(), t.replicate.to_string()])
            .collect()
    };
    run_tasks(writer, &tasks, threads, keys, |t| {
        let train = build_dataset(&spec, t.n_s, t.n_t, t.seed)?;
        let (m, _) = estimate_m_big_m(&[&train.u, &test.u])?;
        let full = full_basis(&train, n_max)?;
        sw.sampling_n
            .iter()
            .map(|&n| {
                let basis = full.truncated(n.min(full.n))?;
                let e_s = sampling_error(&basis.v, &test, &basis.sigma2, basis.n, m)?;
                let e_pod = pod_error(&basis.sigma2, basis.n, m)?;
                Ok(vec![
                    kind.tag().into(),
                    n.to_string(),
                    t.n_s.to_string(),
                    t.n_t.to_string(),
                    t.replicate.to_string(),
                    t.seed.to_string(),
                    fmt_f(e_s),
                    fmt_f(e_pod),
                    fmt_f(m),
                ])
            })
            .collect()
    })
}

fn pod_decay_sweep(cfg: &RunConfig, writer: &mut SweepWriter, threads: usize) -> Result<usize> {
    let sw = &cfg.sweep;
    let kind = SweepKind::PodDecay;
    if sw.pod_n.is_empty() || sw.replicates == 0 {
        return Err(Error::Config("pod-decay needs sweep.pod_n and sweep.replicates".into()));
    }
    let spec = cfg.problem.spec();
    let (n_s, n_t) = (cfg.data.n_s, cfg.data.n_t);
    // replicate 0 is the configured training set itself
    let tasks: Vec<(usize, u64)> = (0..sw.replicates)
        .map(|r| (r, if r == 0 { cfg.train_seed() } else { derive_seed(cfg.seed, &[kind.code(), r as u64]) }))
        .collect();
    let n_max = sw.pod_n.iter().copied().max().unwrap_or(1);
    let keys = |t: &(usize, u64)| -> Vec<Row> {
        sw.pod_n
            .iter()
            .map(|n| vec![kind.tag().into(), n.to_string(), n_s.to_string(), n_t.to_string(), t.0.to_string()])
            .collect()
    };
    run_tasks(writer, &tasks, threads, keys, |&(replicate, seed)| {
        let train = build_dataset(&spec, n_s, n_t, seed)?;
        let (m, _) = estimate_m_big_m(&[&train.u])?;
        let full = full_basis(&train, n_max)?;
        sw.pod_n
            .iter()
            .map(|&n| {
                Ok(vec![
                    kind.tag().into(),
                    n.to_string(),
                    n_s.to_string(),
                    n_t.to_string(),
                    replicate.to_string(),
                    seed.to_string(),
                    fmt_f(pod_error(&full.sigma2, n, m)?),
                    fmt_f(m),
                ])
            })
            .collect()
    })
}

/// Residual depth of a lin+ResNet whose active weights come closest to `target`.
pub fn matched_resnet_depth(n_inputs: usize, n_pod: usize, k: usize, target: usize) -> usize {
    let input_layer = n_inputs * n_pod + n_pod;
    let per_block = 2 * n_pod * k + k;
    let depth = (target.saturating_sub(input_layer) as f64 / per_block as f64).round() as usize;
    depth.max(1)
}

/// Architecture of `family` at hidden width `width`. POD-DL-ROM scales the reduced
/// network and the decoder together; lin+ResNet matches the POD-DL-ROM budget by depth.
pub fn complexity_arch(
    family: Family,
    base: &ArchConfig,
    width: usize,
    n_inputs: usize,
    n_pod: usize,
    p: usize,
) -> Result<ArchConfig> {
    let mut arch = base.clone();
    match family {
        Family::PodDlRom => {
            arch.phi_width = width;
            arch.ae_width = width;
        }
        Family::PodDnn => arch.dnn_width = width,
        Family::LinResnet => {
            let dl = complexity_arch(Family::PodDlRom, base, width, n_inputs, n_pod, p)?;
            let nets = init_dl_rom(n_inputs, n_pod, p, &dl, 0)?;
            let target = nets.phi.count_active_weights() + nets.psi.count_active_weights();
            arch.res_depth = matched_resnet_depth(n_inputs, n_pod, arch.res_k, target);
        }
    }
    Ok(arch)
}

struct TrainTask {
    family: Family,
    width: usize,
    replicate: usize,
    seed: u64,
}

fn train_cfg(base: &TrainConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        ..base.clone()
    }
}

fn complexity_sweep(cfg: &RunConfig, writer: &mut SweepWriter, threads: usize) -> Result<usize> {
    let sw = &cfg.sweep;
    let kind = SweepKind::Complexity;
    if sw.widths.is_empty() || sw.families.is_empty() || sw.train_replicates == 0 {
        return Err(Error::Config(
            "complexity needs sweep.widths, sweep.families and sweep.train_replicates".into(),
        ));
    }
    let spec = cfg.problem.spec();
    let train = build_dataset(&spec, cfg.data.n_s, cfg.data.n_t, cfg.train_seed())?;
    let test = test_set(cfg, &spec)?;
    let basis = full_basis(&train, cfg.pod.n)?;
    let n_inputs = train.p() + usize::from(train.is_time_dependent());
    let mut tasks = Vec::new();
    for &family in &sw.families {
        for &width in &sw.widths {
            for replicate in 0..sw.train_replicates {
                let seed = derive_seed(cfg.train.seed, &[kind.code(), width as u64, replicate as u64]);
                tasks.push(TrainTask {
                    family,
                    width,
                    replicate,
                    seed,
                });
            }
        }
    }
    let keys = |t: &TrainTask| -> Vec<Row> {
        vec![vec![
            kind.tag().into(),
            t.family.tag().into(),
            t.width.to_string(),
            t.replicate.to_string(),
        ]]
    };
    run_tasks(writer, &tasks, threads, keys, |t| {
        let arch = complexity_arch(t.family, &cfg.arch, t.width, n_inputs, basis.n, train.p())?;
        let (model, log) = train_model(t.family, &train, &basis, &arch, &train_cfg(&cfg.train, t.seed))?;
        let u_hat = model.predict_batch(&test.points)?;
        let e_r = relative_error(&test.u, &u_hat)?;
        info!("complexity {} width {} rep {}: E_R = {e_r:.4e}", t.family, t.width, t.replicate);
        Ok(vec![vec![
            kind.tag().into(),
            t.family.tag().into(),
            t.width.to_string(),
            t.replicate.to_string(),
            t.seed.to_string(),
            model.active_weights().to_string(),
            fmt_f(e_r),
            log.records.len().to_string(),
            fmt_f(log.best_val),
        ]])
    })
}

fn bounds_sweep(cfg: &RunConfig, writer: &mut SweepWriter, threads: usize) -> Result<usize> {
    let sw = &cfg.sweep;
    let kind = SweepKind::Bounds;
    if sw.pod_n.is_empty() {
        return Err(Error::Config("bounds needs sweep.pod_n".into()));
    }
    let spec = cfg.problem.spec();
    let train = build_dataset(&spec, cfg.data.n_s, cfg.data.n_t, cfg.train_seed())?;
    let test = test_set(cfg, &spec)?;
    let full = full_basis(&train, sw.pod_n.iter().copied().max().unwrap_or(1))?;
    let keys = |n: &usize| -> Vec<Row> { vec![vec![kind.tag().into(), n.to_string()]] };
    run_tasks(writer, &sw.pod_n, threads, keys, |&n| {
        let basis = full.truncated(n.min(full.n))?;
        let (model, _) = train_model(cfg.family, &train, &basis, &cfg.arch, &cfg.train)?;
        let r = bound_report(&model, &train, &test)?;
        info!("bounds N={n}: {} <= {} <= {}", r.lower_bound, r.e_r, r.upper_bound);
        Ok(vec![vec![
            kind.tag().into(),
            n.to_string(),
            model.latent_dim().unwrap_or(0).to_string(),
            cfg.train.seed.to_string(),
            model.active_weights().to_string(),
            fmt_f(r.e_r),
            fmt_f(r.e_s),
            fmt_f(r.e_pod),
            fmt_f(r.e_nn),
            fmt_f(r.tilde_e_pod),
            fmt_f(r.lower_bound),
            fmt_f(r.upper_bound),
            fmt_f(r.m),
            fmt_f(r.big_m),
        ]])
    })
}

/// One fitted log-log slope of the summary.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SummaryLine {
    pub sweep: String,
    pub group: String,
    pub x: String,
    pub y: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

fn read_rows(kind: SweepKind, path: &Path) -> Result<Vec<BTreeMap<String, String>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.iter().map(String::as_str).ne(kind.header().iter().copied()) {
        return Err(Error::Format(format!("{} is not a {kind} sweep file", path.display())));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(header.iter().cloned().zip(rec.iter().map(str::to_string)).collect())
        })
        .collect()
}

fn num(row: &BTreeMap<String, String>, col: &str) -> Result<f64> {
    row[col]
        .parse()
        .map_err(|_| Error::Format(format!("column {col} holds non-numeric '{}'", row[col])))
}

/// Aggregates `y` over rows sharing the same `x` (mean or median), then fits a
/// log-log line; points with non-positive aggregates are left out.
fn fit_group(
    kind: SweepKind,
    group: String,
    rows: &[&BTreeMap<String, String>],
    x: &str,
    y: &str,
    median: bool,
) -> Result<Option<SummaryLine>> {
    let mut by_x: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    for row in rows {
        let xv = num(row, x)?;
        by_x.entry(xv.to_bits()).or_insert((xv, Vec::new())).1.push(num(row, y)?);
    }
    let mut pts: Vec<(f64, f64)> = by_x
        .into_values()
        .map(|(xv, mut ys)| {
            let agg = if median {
                ys.sort_by(f64::total_cmp);
                let k = ys.len();
                if k % 2 == 1 {
                    ys[k / 2]
                } else {
                    0.5 * (ys[k / 2 - 1] + ys[k / 2])
                }
            } else {
                ys.iter().sum::<f64>() / ys.len() as f64
            };
            (xv, agg)
        })
        .filter(|&(xv, yv)| xv > 0.0 && yv > 0.0)
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 2 {
        return Ok(None);
    }
    let fit = fit_loglog_slope(&pts)?;
    Ok(Some(SummaryLine {
        sweep: kind.tag().into(),
        group,
        x: x.into(),
        y: y.into(),
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points: pts.len(),
    }))
}

fn group_by<'a>(
    rows: &'a [BTreeMap<String, String>],
    col: &str,
) -> BTreeMap<String, Vec<&'a BTreeMap<String, String>>> {
    let mut g: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for r in rows {
        g.entry(r[col].clone()).or_default().push(r);
    }
    g
}

/// Recomputes the slope summary from a sweep CSV.
pub fn summarize(kind: SweepKind, csv_path: &Path) -> Result<Vec<SummaryLine>> {
    let rows = read_rows(kind, csv_path)?;
    let mut out = Vec::new();
    match kind {
        SweepKind::SamplingNs | SweepKind::SamplingNt => {
            let x = if kind == SweepKind::SamplingNs { "N_s" } else { "N_t" };
            for (n, group) in group_by(&rows, "N") {
                out.extend(fit_group(kind, format!("N={n}"), &group, x, "E_S", false)?);
            }
        }
        SweepKind::PodDecay => {
            let all: Vec<_> = rows.iter().collect();
            out.extend(fit_group(kind, "all".into(), &all, "N", "E_POD", false)?);
        }
        SweepKind::Complexity => {
            for (fam, group) in group_by(&rows, "family") {
                out.extend(fit_group(kind, fam, &group, "active_weights", "E_R", true)?);
            }
        }
        SweepKind::Bounds => {
            let all: Vec<_> = rows.iter().collect();
            for y in ["E_R", "E_POD", "tilde_E_POD"] {
                out.extend(fit_group(kind, "all".into(), &all, "N", y, false)?);
            }
        }
    }
    Ok(out)
}

pub struct SweepOutcome {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub new_rows: usize,
    pub lines: Vec<SummaryLine>,
}

pub fn cmd_sweep(kind: SweepKind, cfg: &RunConfig, out: &Path, threads: usize) -> Result<SweepOutcome> {
    ensure_dir(out)?;
    let csv = kind.csv_path(out);
    let mut writer = SweepWriter::open(kind, &csv)?;
    let new_rows = match kind {
        SweepKind::SamplingNs | SweepKind::SamplingNt => sampling_sweep(cfg, kind, &mut writer, threads)?,
        SweepKind::PodDecay => pod_decay_sweep(cfg, &mut writer, threads)?,
        SweepKind::Complexity => complexity_sweep(cfg, &mut writer, threads)?,
        SweepKind::Bounds => bounds_sweep(cfg, &mut writer, threads)?,
    };
    drop(writer);
    let lines = summarize(kind, &csv)?;
    let summary = kind.summary_path(out);
    let mut w = csv::Writer::from_path(&summary)?;
    for l in &lines {
        w.serialize(l)?;
    }
    if lines.is_empty() {
        w.write_record(["sweep", "group", "x", "y", "slope", "intercept", "r_squared", "points"])?;
    }
    w.flush()?;
    Ok(SweepOutcome {
        csv,
        summary,
        new_rows,
        lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_tags_round_trip() {
        for k in [
            SweepKind::SamplingNs,
            SweepKind::SamplingNt,
            SweepKind::PodDecay,
            SweepKind::Complexity,
            SweepKind::Bounds,
        ] {
            assert_eq!(k.tag().parse::<SweepKind>().unwrap(), k);
            assert!(k.key_len() <= k.header().len());
        }
        assert!("fig4".parse::<SweepKind>().is_err());
    }

    #[test]
    fn seeds_differ_per_part() {
        let a = derive_seed(0, &[1, 0, 0]);
        assert_ne!(a, derive_seed(0, &[1, 0, 1]));
        assert_ne!(a, derive_seed(0, &[1, 1, 0]));
        assert_eq!(a, derive_seed(0, &[1, 0, 0]));
    }

    #[test]
    fn resnet_depth_matches_budget() {
        // input layer 2*20+20 = 60, block 2*20*5+5 = 205
        assert_eq!(matched_resnet_depth(2, 20, 5, 60 + 3 * 205), 3);
        assert_eq!(matched_resnet_depth(2, 20, 5, 10), 1);
    }
}
