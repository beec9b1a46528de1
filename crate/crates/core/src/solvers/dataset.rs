use std::f64::consts::PI;

use rayon::prelude::*;

use super::benchmark::{check_beta, eval_benchmark};
use super::heat1d::{uniform_grid, CrankNicolson, ParametricHeat, DEFAULT_TIME_STEPS};
use super::sampling::{box_volume, sample_parameters, time_grid};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// One `(mu, t)` input pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamPoint {
    pub mu: Vec<f64>,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProblemKind {
    Benchmark { beta: f64 },
    Heat1d,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub bounds: Vec<(f64, f64)>,
    pub final_time: f64,
    pub n_h: usize,
    /// Internal time steps of the heat solver over `[0, T]`.
    pub time_steps: usize,
}

impl ProblemSpec {
    pub fn benchmark(beta: f64) -> Self {
        Self {
            kind: ProblemKind::Benchmark { beta },
            bounds: vec![(0.0, 1.0), (0.0, 1.0), (1.0, 2.0)],
            final_time: 0.0,
            n_h: 1000,
            time_steps: 0,
        }
    }

    pub fn heat1d() -> Self {
        Self {
            kind: ProblemKind::Heat1d,
            bounds: vec![(0.0, 1.0)],
            final_time: 1.0,
            n_h: 100,
            time_steps: DEFAULT_TIME_STEPS,
        }
    }

    pub fn p(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.final_time > 0.0
    }

    pub fn grid(&self) -> Vec<f64> {
        match self.kind {
            ProblemKind::Benchmark { .. } => uniform_grid(self.n_h, 0.0, 1.0),
            ProblemKind::Heat1d => uniform_grid(self.n_h, 0.0, PI),
        }
    }

    /// `|P| · T`, or `|P|` for stationary problems.
    pub fn domain_volume(&self) -> f64 {
        let vp = box_volume(&self.bounds);
        if self.is_time_dependent() {
            vp * self.final_time
        } else {
            vp
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ProblemKind::Benchmark { beta } => {
                check_beta(beta)?;
                if self.p() != 3 || self.final_time != 0.0 {
                    return Err(Error::InvalidArgument(
                        "benchmark problem has 3 parameters and no time axis".into(),
                    ));
                }
            }
            ProblemKind::Heat1d => {
                if self.p() != 1 || !(self.final_time > 0.0) || self.time_steps == 0 {
                    return Err(Error::InvalidArgument(
                        "heat problem has 1 parameter, T > 0 and at least one time step".into(),
                    ));
                }
            }
        }
        if self.n_h < 3 {
            return Err(Error::InvalidArgument(format!("need at least 3 grid nodes, got {}", self.n_h)));
        }
        Ok(())
    }

    /// Snapshots for one parameter vector at the given instants.
    pub fn solve(&self, mu: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
        match self.kind {
            ProblemKind::Benchmark { beta } => {
                let u = eval_benchmark(mu, beta, &self.grid())?;
                Ok(vec![u; times.len().max(1)])
            }
            ProblemKind::Heat1d => {
                let cn = CrankNicolson::new(self.n_h, PI, self.final_time, self.time_steps)?;
                cn.solve(&ParametricHeat { mu: mu[0] }, times)
            }
        }
    }
}

/// Snapshot matrix with its `(mu, t)` bookkeeping; columns are sample-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSet {
    pub u: DenseMatrix,
    pub points: Vec<ParamPoint>,
    pub n_s: usize,
    pub n_t: usize,
    pub domain_volume: f64,
}

impl SnapshotSet {
    pub fn new(u: DenseMatrix, points: Vec<ParamPoint>, n_s: usize, n_t: usize, domain_volume: f64) -> Result<Self> {
        if u.cols() != n_s * n_t || points.len() != u.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} columns, {} points, N_s={n_s}, N_t={n_t}",
                u.cols(),
                points.len()
            )));
        }
        if !(domain_volume > 0.0) {
            return Err(Error::InvalidArgument(format!("domain volume must be positive, got {domain_volume}")));
        }
        Ok(Self {
            u,
            points,
            n_s,
            n_t,
            domain_volume,
        })
    }

    pub fn n_h(&self) -> usize {
        self.u.rows()
    }

    pub fn n_data(&self) -> usize {
        self.u.cols()
    }

    pub fn p(&self) -> usize {
        self.points.first().map_or(0, |pt| pt.mu.len())
    }

    /// The distinct parameter vectors, one per sample.
    pub fn params(&self) -> Vec<Vec<f64>> {
        (0..self.n_s).map(|s| self.points[s * self.n_t].mu.clone()).collect()
    }

    /// The shared time instants of every sample.
    pub fn times(&self) -> Vec<f64> {
        self.points[..self.n_t].iter().map(|p| p.t).collect()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.points.iter().any(|p| p.t != 0.0)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.u.column(j)
    }
}

/// Sample-major snapshot set for `n_s` uniform parameter draws and `n_t` uniform instants.
pub fn build_dataset(spec: &ProblemSpec, n_s: usize, n_t: usize, seed: u64) -> Result<SnapshotSet> {
    spec.validate()?;
    let params = sample_parameters(n_s, &spec.bounds, seed)?;
    build_dataset_from_params(spec, &params, n_t)
}

/// As `build_dataset` with explicitly given parameter vectors.
pub fn build_dataset_from_params(spec: &ProblemSpec, params: &[Vec<f64>], n_t: usize) -> Result<SnapshotSet> {
    spec.validate()?;
    let times = if spec.is_time_dependent() {
        time_grid(n_t, spec.final_time)?
    } else {
        if n_t != 1 {
            return Err(Error::InvalidArgument(format!(
                "stationary problem takes N_t = 1, got {n_t}"
            )));
        }
        vec![0.0]
    };
    let n_s = params.len();
    // per-sample solves are deterministic, so the ordered collect is schedule-independent
    let blocks: Vec<Vec<Vec<f64>>> = params
        .par_iter()
        .map(|mu| spec.solve(mu, &times))
        .collect::<Result<_>>()?;
    let mut u = DenseMatrix::zeros(spec.n_h, n_s * n_t);
    let mut points = Vec::with_capacity(n_s * n_t);
    for (s, (mu, block)) in params.iter().zip(&blocks).enumerate() {
        for (k, col) in block.iter().enumerate() {
            if let Some(i) = col.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("snapshot of sample {s}, node {i}")));
            }
            u.set_column(s * n_t + k, col);
            points.push(ParamPoint {
                mu: mu.clone(),
                t: times[k],
            });
        }
    }
    SnapshotSet::new(u, points, n_s, n_t, spec.domain_volume())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_shape_and_volume() {
        let d = build_dataset(&ProblemSpec::benchmark(3.0), 7, 1, 1).unwrap();
        assert_eq!((d.n_h(), d.n_data()), (1000, 7));
        assert_eq!(d.domain_volume, 1.0);
        assert!(!d.is_time_dependent());
        assert!(build_dataset(&ProblemSpec::benchmark(3.0), 7, 2, 1).is_err());
    }

    #[test]
    fn heat_columns_are_sample_major() {
        let mut spec = ProblemSpec::heat1d();
        spec.time_steps = 100;
        let d = build_dataset(&spec, 3, 4, 5).unwrap();
        assert_eq!((d.n_h(), d.n_data()), (100, 12));
        assert_eq!(d.times(), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(d.points[4].mu, d.params()[1]);
        let direct = spec.solve(&d.params()[2], &d.times()).unwrap();
        assert_eq!(d.column(2 * 4 + 3), direct[3]);
    }

    #[test]
    fn single_column_matches_direct_call() {
        let spec = ProblemSpec::benchmark(1.5);
        let d = build_dataset(&spec, 1, 1, 9).unwrap();
        let direct = eval_benchmark(&d.params()[0], 1.5, &spec.grid()).unwrap();
        assert_eq!(d.column(0), direct);
    }
}
