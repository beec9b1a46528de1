use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{norm_sq, DenseMatrix};
use super::svd::{orthonormal_columns, randomized_svd, thin_svd};
use crate::error::{dim_err, Error, Result};

/// Relative floor below which correlation eigenvalues are treated as exact zeros.
pub const EIG_CLAMP: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SvdMethod {
    Thin,
    Randomized {
        oversampling: usize,
        power_iters: usize,
        seed: u64,
    },
}

impl SvdMethod {
    pub fn randomized(seed: u64) -> Self {
        SvdMethod::Randomized {
            oversampling: 10,
            power_iters: 2,
            seed,
        }
    }
}

/// Orthonormal POD basis plus the correlation spectrum it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct PodBasis {
    pub v: DenseMatrix,
    pub sigma2: Vec<f64>,
    pub n: usize,
    pub domain_volume: f64,
}

impl PodBasis {
    /// POD of the snapshot matrix `u` (N_h x N_data), keeping `n` modes.
    pub fn from_snapshots(u: &DenseMatrix, domain_volume: f64, n: usize, method: SvdMethod) -> Result<Self> {
        let n_data = u.cols();
        let (v, s) = match method {
            SvdMethod::Thin => thin_svd(u, n)?,
            SvdMethod::Randomized {
                oversampling,
                power_iters,
                seed,
            } => randomized_svd(u, n, oversampling, power_iters, seed)?,
        };
        let sigma2 = correlation_eigs(&s, domain_volume, n_data)?;
        Ok(Self {
            v,
            sigma2,
            n,
            domain_volume,
        })
    }

    pub fn n_h(&self) -> usize {
        self.v.rows()
    }

    /// Same spectrum, first `n` modes only.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Ok(Self {
            v: self.v.leading_columns(n)?,
            sigma2: self.sigma2.clone(),
            n,
            domain_volume: self.domain_volume,
        })
    }

    pub fn tail(&self) -> f64 {
        tail_energy(&self.sigma2, self.n.min(self.sigma2.len())).unwrap_or(0.0)
    }

    pub fn project(&self, u: &[f64]) -> Result<Vec<f64>> {
        project(&self.v, u)
    }

    pub fn lift(&self, q: &[f64]) -> Result<Vec<f64>> {
        lift(&self.v, q)
    }
}

/// `sigma2[k] = (volume / N_data) s[k]²`, with round-off level values clamped to 0.
pub fn correlation_eigs(s: &[f64], domain_volume: f64, n_data: usize) -> Result<Vec<f64>> {
    if n_data == 0 {
        return Err(Error::InvalidArgument("correlation eigenvalues need N_data >= 1".into()));
    }
    if !(domain_volume > 0.0) {
        return Err(Error::InvalidArgument(format!("domain volume must be positive, got {domain_volume}")));
    }
    let scale = domain_volume / n_data as f64;
    let mut out: Vec<f64> = s.iter().map(|x| scale * x * x).collect();
    let floor = EIG_CLAMP * out.first().copied().unwrap_or(0.0);
    for x in out.iter_mut() {
        if *x < floor {
            *x = 0.0;
        }
    }
    Ok(out)
}

/// `Σ_{k > n} sigma2[k]` (one-based `k`).
pub fn tail_energy(sigma2: &[f64], n: usize) -> Result<f64> {
    if n > sigma2.len() {
        return dim_err(format!("tail index {n} beyond spectrum of length {}", sigma2.len()));
    }
    // summing from the small end keeps tiny tails accurate
    Ok(sigma2[n..].iter().rev().sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PodDimChoice {
    pub n: usize,
    /// False when even the full spectrum misses the threshold.
    pub reachable: bool,
}

/// Smallest `j` with `tail(j) <= m² eps² / 9`.
pub fn select_pod_dim(sigma2: &[f64], m: f64, eps: f64) -> Result<PodDimChoice> {
    if !(m > 0.0) {
        return Err(Error::InvalidArgument(format!("norm lower bound must be positive, got {m}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("target accuracy must lie in (0,1), got {eps}")));
    }
    let threshold = m * m * eps * eps / 9.0;
    for j in 0..=sigma2.len() {
        if tail_energy(sigma2, j)? <= threshold {
            return Ok(PodDimChoice { n: j, reachable: true });
        }
    }
    Ok(PodDimChoice {
        n: sigma2.len(),
        reachable: false,
    })
}

/// `q = Vᵀ u`.
pub fn project(v: &DenseMatrix, u: &[f64]) -> Result<Vec<f64>> {
    v.t_matvec(u)
}

/// `u = V q`.
pub fn lift(v: &DenseMatrix, q: &[f64]) -> Result<Vec<f64>> {
    v.matvec(q)
}

/// `‖u − VVᵀu‖²`.
pub fn projection_residual_sq(v: &DenseMatrix, u: &[f64]) -> Result<f64> {
    let q = project(v, u)?;
    let back = lift(v, &q)?;
    Ok(u.iter().zip(&back).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Sum of projection residuals over the columns of `u`.
pub fn total_projection_residual(v: &DenseMatrix, u: &DenseMatrix) -> Result<f64> {
    if v.rows() != u.rows() {
        return dim_err(format!("basis has {} rows, snapshots {}", v.rows(), u.rows()));
    }
    // ‖u‖² − ‖Vᵀu‖² is cancellation-prone, so form the residual explicitly
    let q = v.t_matmul(u)?;
    let back = v.matmul(&q)?;
    Ok(u.data().iter().zip(back.data()).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Gaussian matrix orthonormalized by QR.
pub fn random_orthonormal(n_rows: usize, n_cols: usize, seed: u64) -> Result<DenseMatrix> {
    if n_cols > n_rows || n_cols == 0 {
        return dim_err(format!("cannot fit {n_cols} orthonormal columns in R^{n_rows}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n_rows * n_cols).map(|_| StandardNormal.sample(&mut rng)).collect();
    let g = DenseMatrix::from_row_major(n_rows, n_cols, data)?;
    Ok(orthonormal_columns(&g))
}

pub fn column_norms(u: &DenseMatrix) -> Vec<f64> {
    u.columns().iter().map(|c| norm_sq(c).sqrt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_formula() {
        assert_eq!(correlation_eigs(&[2.0, 1.0], 1.0, 4).unwrap(), vec![1.0, 0.25]);
        assert_eq!(correlation_eigs(&[0.0], 3.0, 2).unwrap(), vec![0.0]);
        assert!(correlation_eigs(&[1.0], 0.0, 2).is_err());
    }

    #[test]
    fn clamps_roundoff_eigenvalues() {
        let e = correlation_eigs(&[1.0, 1e-8], 1.0, 1).unwrap();
        assert_eq!(e[1], 0.0);
    }

    #[test]
    fn tail_sums() {
        let s = [4.0, 1.0, 0.25];
        assert_eq!(tail_energy(&s, 1).unwrap(), 1.25);
        assert_eq!(tail_energy(&s, 3).unwrap(), 0.0);
        assert!(tail_energy(&s, 4).is_err());
    }

    #[test]
    fn selection_examples() {
        assert_eq!(select_pod_dim(&[1.0, 0.0, 0.0], 1.0, 0.5).unwrap().n, 1);
        let geo: Vec<f64> = (1..=20).map(|k| 4f64.powi(-k)).collect();
        let c = select_pod_dim(&geo, 1.0, 0.1).unwrap();
        assert_eq!(c, PodDimChoice { n: 5, reachable: true });
        assert!(select_pod_dim(&geo, 0.0, 0.1).is_err());
        assert!(select_pod_dim(&geo, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_dimension_when_threshold_is_loose() {
        let c = select_pod_dim(&[0.01, 0.001], 1.0, 0.9).unwrap();
        assert_eq!(c, PodDimChoice { n: 0, reachable: true });
    }

    #[test]
    fn project_and_lift() {
        let v = random_orthonormal(6, 2, 9).unwrap();
        let inside = lift(&v, &[0.3, -1.2]).unwrap();
        let back = lift(&v, &project(&v, &inside).unwrap()).unwrap();
        for (a, b) in inside.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut e = DenseMatrix::zeros(3, 1);
        e.set(0, 0, 1.0);
        assert_eq!(project(&e, &[0.0, 2.0, -1.0]).unwrap(), vec![0.0]);
        assert!(project(&e, &[1.0]).is_err());
    }

    #[test]
    fn random_orthonormal_contract() {
        let w = random_orthonormal(3, 3, 1).unwrap();
        assert!(w.orthonormality_defect() <= 1e-10);
        assert_eq!(random_orthonormal(5, 2, 4).unwrap(), random_orthonormal(5, 2, 4).unwrap());
        assert!(random_orthonormal(2, 3, 0).is_err());
    }
}
