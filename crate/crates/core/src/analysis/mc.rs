use crate::error::{dim_err, Error, Result};
use crate::linalg::{norm_sq, DenseMatrix};

/// `volume · mean(values)`.
pub fn mc_integral(values: &[f64], domain_volume: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("Monte Carlo estimate needs at least one sample".into()));
    }
    Ok(domain_volume * values.iter().sum::<f64>() / values.len() as f64)
}

/// Discrete weighted norm `(volume · mean_j w_j ‖f_j‖²)^{1/2}` of a field stored column-wise.
pub fn weighted_norm(field: &DenseMatrix, weights: &[f64], domain_volume: f64) -> Result<f64> {
    if weights.len() != field.cols() {
        return dim_err(format!("{} weights for {} samples", weights.len(), field.cols()));
    }
    let t = field.transpose();
    let vals: Vec<f64> = (0..t.rows()).map(|j| weights[j] * norm_sq(t.row(j))).collect();
    Ok(mc_integral(&vals, domain_volume)?.sqrt())
}

/// Weights `‖u_j‖^{-2}` of a snapshot matrix.
pub fn inverse_square_norms(u: &DenseMatrix) -> Result<Vec<f64>> {
    let t = u.transpose();
    (0..t.rows())
        .map(|j| {
            let n2 = norm_sq(t.row(j));
            if n2 > 0.0 {
                Ok(1.0 / n2)
            } else {
                Err(Error::ZeroNorm { index: j })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_single_sample() {
        assert_eq!(mc_integral(&[2.0; 7], 3.0).unwrap(), 6.0);
        assert_eq!(mc_integral(&[0.25], 4.0).unwrap(), 1.0);
        assert!(mc_integral(&[], 1.0).is_err());
    }

    #[test]
    fn weighted_norm_by_hand() {
        let f = DenseMatrix::from_row_major(2, 2, vec![3.0, 0.0, 4.0, 1.0]).unwrap();
        // column norms² 25 and 1, weights 1 and 4 → mean 14.5
        let n = weighted_norm(&f, &[1.0, 4.0], 2.0).unwrap();
        assert!((n - 29f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_norm_weight_is_an_error() {
        let u = DenseMatrix::from_row_major(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(inverse_square_norms(&u), Err(Error::ZeroNorm { index: 1 })));
    }
}
