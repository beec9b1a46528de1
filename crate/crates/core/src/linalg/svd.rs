use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{axpy, dot, norm_sq, DenseMatrix};
use crate::error::{dim_err, Error, Result};

pub const MAX_SWEEPS: usize = 100;
pub const JACOBI_TOL: f64 = 1e-12;

/// Full thin decomposition `A = left · diag(s) · rightᵀ` with `r = min(rows, cols)` factors.
#[derive(Clone, Debug)]
pub struct Svd {
    pub left: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub right: DenseMatrix,
}

/// Householder QR of a tall matrix given by its columns.
/// Returns the explicit thin `Q` (as columns) and the square `R`.
pub(crate) fn householder_qr(mut cols: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, DenseMatrix) {
    let c = cols.len();
    let r = cols.first().map_or(0, Vec::len);
    debug_assert!(r >= c);
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(c);
    let mut rmat = DenseMatrix::zeros(c, c);
    for k in 0..c {
        let x = &cols[k][k..];
        let alpha = norm_sq(x).sqrt();
        let mut v = x.to_vec();
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vn = norm_sq(&v);
        if vn > 0.0 {
            let inv = 1.0 / vn.sqrt();
            v.iter_mut().for_each(|e| *e *= inv);
            for col in cols.iter_mut().skip(k) {
                let tail = &mut col[k..];
                let d = 2.0 * dot(&v, tail);
                axpy(-d, &v, tail);
            }
        } else {
            v.iter_mut().for_each(|e| *e = 0.0);
        }
        for j in k..c {
            rmat.set(k, j, cols[j][k]);
        }
        reflectors.push(v);
    }
    let mut q: Vec<Vec<f64>> = (0..c)
        .map(|j| {
            let mut e = vec![0.0; r];
            e[j] = 1.0;
            e
        })
        .collect();
    for (k, v) in reflectors.iter().enumerate().rev() {
        for col in q.iter_mut() {
            let tail = &mut col[k..];
            let d = 2.0 * dot(v, tail);
            if d != 0.0 {
                axpy(-d, v, tail);
            }
        }
    }
    (q, rmat)
}

/// One-sided Jacobi: rotates the columns of `b` until mutually orthogonal,
/// accumulating the rotations in `j` (both given as column lists).
fn jacobi_orthogonalize(b: &mut [Vec<f64>], j: &mut [Vec<f64>]) -> Result<()> {
    let n = b.len();
    let total: f64 = b.iter().map(|c| norm_sq(c)).sum();
    if total == 0.0 || n < 2 {
        return Ok(());
    }
    // columns at round-off level relative to the whole matrix carry no direction
    let negligible = total * 1e-28;
    let mut off = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        off = 0.0_f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norm_sq(&b[p]);
                let beta = norm_sq(&b[q]);
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = dot(&b[p], &b[q]);
                let ratio = gamma.abs() / (alpha * beta).sqrt();
                off = off.max(ratio);
                if ratio <= JACOBI_TOL {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate(b, p, q, cs, sn);
                rotate(j, p, q, cs, sn);
            }
        }
        if off <= JACOBI_TOL {
            return Ok(());
        }
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        residual: off,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (x, y) = (&mut lo[p], &mut hi[0]);
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (ap, bp) = (*a, *b);
        *a = c * ap - s * bp;
        *b = s * ap + c * bp;
    }
}

fn check_finite(u: &DenseMatrix) -> Result<()> {
    if u.data().iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("SVD input".into()))
    }
}

/// Thin SVD with all `min(rows, cols)` factors, singular values nonincreasing.
pub fn thin_svd_full(u: &DenseMatrix) -> Result<Svd> {
    check_finite(u)?;
    let (m, n) = (u.rows(), u.cols());
    let r = m.min(n);
    if r == 0 {
        return dim_err("SVD of an empty matrix");
    }
    let tall = m >= n;
    // Columns of the tall factor: A itself, or Aᵀ (whose columns are the rows of A).
    let x_cols: Vec<Vec<f64>> = if tall {
        u.columns()
    } else {
        (0..m).map(|i| u.row(i).to_vec()).collect()
    };
    let (q, rmat) = householder_qr(x_cols);
    // Tall: A = Q R and we orthogonalize Rᵀ; wide: Aᵀ = Q R and we orthogonalize R.
    let mut b: Vec<Vec<f64>> = if tall {
        (0..r).map(|i| rmat.row(i).to_vec()).collect()
    } else {
        rmat.columns()
    };
    let mut jrot: Vec<Vec<f64>> = (0..r)
        .map(|k| {
            let mut e = vec![0.0; r];
            e[k] = 1.0;
            e
        })
        .collect();
    jacobi_orthogonalize(&mut b, &mut jrot)?;

    let norms: Vec<f64> = b.iter().map(|c| norm_sq(c).sqrt()).collect();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b2| norms[b2].total_cmp(&norms[a]).then(a.cmp(&b2)));

    let mut left = DenseMatrix::zeros(m, r);
    let mut right = DenseMatrix::zeros(n, r);
    let mut s = Vec::with_capacity(r);
    for (k, &idx) in order.iter().enumerate() {
        let sigma = norms[idx];
        s.push(sigma);
        let z: Vec<f64> = if sigma > 0.0 {
            b[idx].iter().map(|x| x / sigma).collect()
        } else {
            vec![0.0; r]
        };
        // `jrot[idx]` is a singular vector of the small factor on the A side
        // opposite to `z`.
        let (lvec, rvec): (Vec<f64>, Vec<f64>) = if tall {
            (combine(&q, &jrot[idx], m), z)
        } else {
            (jrot[idx].clone(), combine(&q, &z, n))
        };
        left.set_column(k, &lvec);
        right.set_column(k, &rvec);
    }
    Ok(Svd {
        left,
        singular_values: s,
        right,
    })
}

fn combine(cols: &[Vec<f64>], coeffs: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (c, &a) in cols.iter().zip(coeffs) {
        if a != 0.0 {
            axpy(a, c, &mut out);
        }
    }
    out
}

/// Leading `n` left singular vectors and the full list of `min(rows, cols)` singular values.
pub fn thin_svd(u: &DenseMatrix, n: usize) -> Result<(DenseMatrix, Vec<f64>)> {
    let r = u.rows().min(u.cols());
    if n > r {
        return dim_err(format!("requested {n} singular vectors of a rank-{r}-bounded matrix"));
    }
    let svd = thin_svd_full(u)?;
    Ok((svd.left.leading_columns(n)?, svd.singular_values))
}

/// Randomized range-finder SVD with subspace (power) iterations.
/// Returns `n` left singular vectors and `n + oversampling` singular value estimates.
pub fn randomized_svd(
    u: &DenseMatrix,
    n: usize,
    oversampling: usize,
    power_iters: usize,
    seed: u64,
) -> Result<(DenseMatrix, Vec<f64>)> {
    check_finite(u)?;
    let (m, cols) = (u.rows(), u.cols());
    let l = n + oversampling;
    if n == 0 {
        return dim_err("randomized SVD needs at least one component");
    }
    if l > m.min(cols) {
        return dim_err(format!(
            "rank {n} + oversampling {oversampling} exceeds min dimension {}",
            m.min(cols)
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega_data: Vec<f64> = (0..cols * l).map(|_| StandardNormal.sample(&mut rng)).collect();
    let omega = DenseMatrix::from_row_major(cols, l, omega_data)?;
    let mut basis = orthonormal_columns(&u.matmul(&omega)?);
    for _ in 0..power_iters {
        let z = orthonormal_columns(&u.t_matmul(&basis)?);
        basis = orthonormal_columns(&u.matmul(&z)?);
    }
    // B = Qᵀ A is l x cols; its left factors rotate Q into singular directions.
    let b = basis.t_matmul(u)?;
    let small = thin_svd_full(&b)?;
    let rotated = basis.matmul(&small.left)?;
    Ok((rotated.leading_columns(n)?, small.singular_values))
}

/// Orthonormal basis of the column space via Householder QR (returns `Q`).
pub(crate) fn orthonormal_columns(a: &DenseMatrix) -> DenseMatrix {
    let (q, _) = householder_qr(a.columns());
    let mut out = DenseMatrix::zeros(a.rows(), a.cols());
    for (j, c) in q.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
        DenseMatrix::from_row_major(rows, cols, data).unwrap()
    }

    fn reconstruct(svd: &Svd) -> DenseMatrix {
        let mut ls = svd.left.clone();
        for i in 0..ls.rows() {
            for (k, s) in svd.singular_values.iter().enumerate() {
                let v = ls.get(i, k) * s;
                ls.set(i, k, v);
            }
        }
        ls.matmul(&svd.right.transpose()).unwrap()
    }

    #[test]
    fn rank_one_copies() {
        let u = DenseMatrix::from_row_major(3, 3, vec![1., 1., 1., 0., 0., 0., 0., 0., 0.]).unwrap();
        let (v, s) = thin_svd(&u, 1).unwrap();
        assert!((s[0] - 3f64.sqrt()).abs() < 1e-14);
        assert!(s[1].abs() < 1e-14 && s[2].abs() < 1e-14);
        assert!((v.get(0, 0).abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_has_unit_values() {
        let (v, s) = thin_svd(&DenseMatrix::identity(4), 4).unwrap();
        assert!(s.iter().all(|x| (x - 1.0).abs() < 1e-15));
        assert!(v.orthonormality_defect() < 1e-15);
    }

    #[test]
    fn reconstructs_tall_and_wide() {
        for (r, c) in [(30, 12), (12, 30), (9, 9)] {
            let a = pseudo_random(r, c, (r * 100 + c) as u64);
            let svd = thin_svd_full(&a).unwrap();
            let rec = reconstruct(&svd);
            let mut diff = 0.0_f64;
            for (x, y) in rec.data().iter().zip(a.data()) {
                diff = diff.max((x - y).abs());
            }
            assert!(diff <= 1e-9 * a.max_abs(), "{r}x{c}: {diff}");
            assert!(svd.left.orthonormality_defect() < 1e-12);
            assert!(svd.right.orthonormality_defect() < 1e-12);
            assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficient_left_factor_is_still_orthonormal() {
        let mut a = DenseMatrix::zeros(6, 4);
        for i in 0..6 {
            a.set(i, 0, i as f64 + 1.0);
            a.set(i, 2, 2.0 * (i as f64 + 1.0));
        }
        let svd = thin_svd_full(&a).unwrap();
        assert!(svd.left.orthonormality_defect() < 1e-12);
        assert!(svd.singular_values[1] < 1e-12);
    }

    #[test]
    fn randomized_rejects_zero_and_oversized() {
        let a = pseudo_random(10, 20, 1);
        assert!(matches!(randomized_svd(&a, 0, 2, 1, 0), Err(Error::DimensionMismatch(_))));
        assert!(randomized_svd(&a, 5, 10, 1, 0).is_err());
    }

    #[test]
    fn randomized_is_deterministic() {
        let a = pseudo_random(20, 40, 3);
        let x = randomized_svd(&a, 3, 5, 2, 11).unwrap();
        let y = randomized_svd(&a, 3, 5, 2, 11).unwrap();
        assert_eq!(x.0, y.0);
        assert_eq!(x.1, y.1);
    }

    #[test]
    fn nan_input_is_rejected() {
        let mut a = DenseMatrix::zeros(2, 2);
        a.data_mut()[1] = f64::NAN;
        assert!(matches!(thin_svd(&a, 1), Err(Error::NonFinite(_))));
    }
}
