use serde::Serialize;

use super::mc::mc_integral;
use crate::error::{dim_err, Error, Result};
use crate::linalg::{norm_sq, tail_energy, DenseMatrix};
use crate::rom::RomModel;
use crate::solvers::SnapshotSet;

/// All estimators for one model on one test set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub n: usize,
    pub e_r: f64,
    pub e_s: f64,
    pub e_pod: f64,
    pub e_nn: f64,
    pub tilde_e_pod: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub n_data_train: usize,
    pub n_data_test: usize,
}

impl ErrorReport {
    pub fn sandwich_holds(&self) -> bool {
        self.lower_bound <= self.e_r && self.e_r <= self.upper_bound
    }
}

/// Squared column norms of a snapshot matrix.
pub fn column_norms_sq(u: &DenseMatrix) -> Vec<f64> {
    let t = u.transpose();
    (0..t.rows()).map(|j| norm_sq(t.row(j))).collect()
}

/// Min and max column norm over every given matrix.
pub fn estimate_m_big_m(sets: &[&DenseMatrix]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    let mut offset = 0;
    for u in sets {
        for (j, n2) in column_norms_sq(u).into_iter().enumerate() {
            if n2 == 0.0 {
                return Err(Error::ZeroNorm { index: offset + j });
            }
            lo = lo.min(n2.sqrt());
            hi = hi.max(n2.sqrt());
        }
        offset += u.cols();
    }
    if offset == 0 {
        return Err(Error::InvalidArgument("no snapshots to scan for norm bounds".into()));
    }
    Ok((lo, hi))
}

fn same_shape(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return dim_err(format!("{}x{} vs {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
    }
    if a.cols() == 0 {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    Ok(())
}

/// `(mean_j ‖u_j − û_j‖² / ‖u_j‖²)^{1/2}`.
pub fn relative_error(u: &DenseMatrix, u_hat: &DenseMatrix) -> Result<f64> {
    same_shape(u, u_hat)?;
    let mut diff = u.clone();
    diff.data_mut().iter_mut().zip(u_hat.data()).for_each(|(a, b)| *a -= b);
    let num = column_norms_sq(&diff);
    let den = column_norms_sq(u);
    let mut acc = 0.0;
    for (j, (a, b)) in num.iter().zip(&den).enumerate() {
        if *b == 0.0 {
            return Err(Error::ZeroNorm { index: j });
        }
        acc += a / b;
    }
    Ok((acc / u.cols() as f64).sqrt())
}

/// `m^{-1} (Σ_{k>N} σ_k²)^{1/2}`.
pub fn pod_error(sigma2: &[f64], n: usize, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::InvalidArgument(format!("norm lower bound must be positive, got {m}")));
    }
    Ok(tail_energy(sigma2, n)?.sqrt() / m)
}

/// `volume · mean_j ‖u_j − VVᵀu_j‖²` over the test columns.
pub fn projection_integral(v: &DenseMatrix, test: &SnapshotSet) -> Result<f64> {
    if v.rows() != test.n_h() {
        return dim_err(format!("basis has {} rows, test snapshots {}", v.rows(), test.n_h()));
    }
    let q = v.t_matmul(&test.u)?;
    let mut r = v.matmul(&q)?;
    r.data_mut().iter_mut().zip(test.u.data()).for_each(|(a, b)| *a = b - *a);
    mc_integral(&column_norms_sq(&r), test.domain_volume)
}

/// `m^{-1} |I − tail|^{1/2}` for a test-set projection integral `I` and a training tail.
pub fn sampling_error_from_parts(integral: f64, tail: f64, m: f64) -> f64 {
    (integral - tail).abs().sqrt() / m
}

/// `m^{-1} |∫‖u − VVᵀu‖² − Σ_{k>N} σ_k²|^{1/2}` with the integral taken over `test`.
pub fn sampling_error(v: &DenseMatrix, test: &SnapshotSet, sigma2: &[f64], n: usize, m: f64) -> Result<f64> {
    if v.cols() != n {
        return dim_err(format!("basis has {} columns, N = {n}", v.cols()));
    }
    let integral = projection_integral(v, test)?;
    Ok(sampling_error_from_parts(integral, tail_energy(sigma2, n)?, m))
}

/// `(mean_j ‖q_j − q̂_j‖² / ‖u_j‖²)^{1/2}` with coefficients stored one sample per row.
pub fn nn_error_from_coeffs(q: &DenseMatrix, q_hat: &DenseMatrix, u_norms_sq: &[f64]) -> Result<f64> {
    same_shape(q, q_hat)?;
    if u_norms_sq.len() != q.rows() {
        return dim_err("norm list does not match coefficient rows");
    }
    let mut acc = 0.0;
    for (j, &n2) in u_norms_sq.iter().enumerate() {
        if n2 == 0.0 {
            return Err(Error::ZeroNorm { index: j });
        }
        let d: f64 = q.row(j).iter().zip(q_hat.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
        acc += d / n2;
    }
    Ok((acc / q.rows() as f64).sqrt())
}

/// E_NN of a model on a test set.
pub fn nn_error(model: &RomModel, test: &SnapshotSet) -> Result<f64> {
    let v = &model.basis().v;
    if v.rows() != test.n_h() {
        return dim_err(format!("model basis has {} rows, test snapshots {}", v.rows(), test.n_h()));
    }
    let q = test.u.t_matmul(v)?;
    let q_hat = model.predict_coeffs(&test.points)?;
    nn_error_from_coeffs(&q, &q_hat, &column_norms_sq(&test.u))
}

/// Raw inputs of a report: everything is derived from the test snapshots, their
/// projections and the predicted coefficients.
pub struct ReportInputs<'a> {
    pub v: &'a DenseMatrix,
    pub sigma2: &'a [f64],
    pub test: &'a SnapshotSet,
    /// Predicted coefficients, one row per test column.
    pub q_hat: &'a DenseMatrix,
    pub m: f64,
    pub big_m: f64,
    pub n_data_train: usize,
}

pub fn assemble_report(inp: &ReportInputs<'_>) -> Result<ErrorReport> {
    let n = inp.v.cols();
    let test = inp.test;
    if inp.v.rows() != test.n_h() {
        return dim_err(format!("basis has {} rows, test snapshots {}", inp.v.rows(), test.n_h()));
    }
    if !(inp.m > 0.0 && inp.m <= inp.big_m) {
        return Err(Error::InvalidArgument(format!("invalid norm bounds m={}, M={}", inp.m, inp.big_m)));
    }
    let q = test.u.t_matmul(inp.v)?;
    let u_hat = inp.v.matmul(&inp.q_hat.transpose())?;
    let e_r = relative_error(&test.u, &u_hat)?;
    let u_norms_sq = column_norms_sq(&test.u);
    let e_nn = nn_error_from_coeffs(&q, inp.q_hat, &u_norms_sq)?;
    let integral = projection_integral(inp.v, test)?;
    let tail = tail_energy(inp.sigma2, n)?;
    let e_s = sampling_error_from_parts(integral, tail, inp.m);
    let e_pod = tail.sqrt() / inp.m;
    let tilde_e_pod = integral.sqrt() / inp.m;
    Ok(ErrorReport {
        n,
        e_r,
        e_s,
        e_pod,
        e_nn,
        tilde_e_pod,
        lower_bound: inp.m / inp.big_m * tilde_e_pod,
        upper_bound: e_s + e_pod + e_nn,
        m: inp.m,
        big_m: inp.big_m,
        n_data_train: inp.n_data_train,
        n_data_test: test.n_data(),
    })
}

/// Full report for a trained model; `m`, `M` are scanned over train ∪ test.
pub fn bound_report(model: &RomModel, train: &SnapshotSet, test: &SnapshotSet) -> Result<ErrorReport> {
    let basis = model.basis();
    let (m, big_m) = estimate_m_big_m(&[&train.u, &test.u])?;
    let q_hat = model.predict_coeffs(&test.points)?;
    assemble_report(&ReportInputs {
        v: &basis.v,
        sigma2: &basis.sigma2,
        test,
        q_hat: &q_hat,
        m,
        big_m,
        n_data_train: train.n_data(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_extremes() {
        let u = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 3.0, -1.0]).unwrap();
        assert_eq!(relative_error(&u, &u).unwrap(), 0.0);
        assert!((relative_error(&u, &DenseMatrix::zeros(2, 2)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pod_error_examples() {
        assert_eq!(pod_error(&[4.0, 1.0], 1, 2.0).unwrap(), 0.5);
        assert_eq!(pod_error(&[4.0, 1.0], 2, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn norm_range() {
        let u = DenseMatrix::from_row_major(1, 2, vec![2.0, -5.0]).unwrap();
        assert_eq!(estimate_m_big_m(&[&u]).unwrap(), (2.0, 5.0));
        let z = DenseMatrix::from_row_major(1, 2, vec![2.0, 0.0]).unwrap();
        assert!(matches!(estimate_m_big_m(&[&u, &z]), Err(Error::ZeroNorm { index: 3 })));
    }

    #[test]
    fn nn_error_constant_shift() {
        let q = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut q_hat = q.clone();
        q_hat.set(0, 0, 1.5);
        q_hat.set(1, 0, 3.5);
        let norms = [4.0, 16.0];
        let expected = 0.5 * ((0.25 + 1.0 / 16.0) / 2.0_f64).sqrt();
        assert!((nn_error_from_coeffs(&q, &q_hat, &norms).unwrap() - expected).abs() < 1e-15);
    }
}
