use crate::error::{Error, Result};

pub const SUPPORTED_BETAS: [f64; 3] = [1.5, 7.0 / 3.0, 3.0];

/// Validates the regularity exponent; unsupported positive values only warn.
pub fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidArgument(format!("benchmark exponent must be positive, got {beta}")));
    }
    if !SUPPORTED_BETAS.iter().any(|b| (b - beta).abs() < 1e-12) {
        log::warn!("benchmark exponent {beta} is outside the supported set {{3/2, 7/3, 3}}");
    }
    Ok(())
}

/// `u(x) = mu3 |x − mu1|^beta exp(−mu2 x)` on every grid node.
pub fn eval_benchmark(mu: &[f64], beta: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if mu.len() != 3 {
        return Err(Error::DimensionMismatch(format!("benchmark expects 3 parameters, got {}", mu.len())));
    }
    check_beta(beta)?;
    let (m1, m2, m3) = (mu[0], mu[1], mu[2]);
    Ok(grid
        .iter()
        .map(|&x| m3 * (x - m1).abs().powf(beta) * (-m2 * x).exp())
        .collect())
}
