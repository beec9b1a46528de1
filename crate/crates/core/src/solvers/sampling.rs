use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Draws `n_s` iid uniform points from the axis-aligned box `bounds`.
pub fn sample_parameters(n_s: usize, bounds: &[(f64, f64)], seed: u64) -> Result<Vec<Vec<f64>>> {
    if n_s == 0 {
        return Err(Error::InvalidArgument("need at least one parameter sample".into()));
    }
    if bounds.is_empty() {
        return Err(Error::InvalidArgument("parameter box has no axes".into()));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!("parameter axis {i} is empty: [{lo}, {hi}]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_s)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| {
                    let u: f64 = rng.random();
                    if hi == lo {
                        lo
                    } else {
                        lo + (hi - lo) * u
                    }
                })
                .collect()
        })
        .collect())
}

/// `{Δt, 2Δt, …, N_t Δt}` with `Δt = T / N_t`.
pub fn time_grid(n_t: usize, final_time: f64) -> Result<Vec<f64>> {
    if n_t == 0 || !(final_time > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time grid needs N_t >= 1 and T > 0, got N_t={n_t}, T={final_time}"
        )));
    }
    Ok((1..=n_t).map(|k| k as f64 * final_time / n_t as f64).collect())
}

pub fn box_volume(bounds: &[(f64, f64)]) -> f64 {
    bounds.iter().map(|(lo, hi)| hi - lo).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_grid_examples() {
        assert_eq!(time_grid(2, 1.0).unwrap(), vec![0.5, 1.0]);
        assert_eq!(time_grid(1, 3.0).unwrap(), vec![3.0]);
        let g = time_grid(4, 0.05).unwrap();
        for (a, b) in g.iter().zip([0.0125, 0.025, 0.0375, 0.05]) {
            assert!((a - b).abs() < 1e-16);
        }
        assert_eq!(g[3], 0.05);
        assert!(time_grid(0, 1.0).is_err());
    }

    #[test]
    fn sampling_is_seeded_and_boxed() {
        let b = [(0.0, 1.0), (1.0, 2.0)];
        let a = sample_parameters(50, &b, 3).unwrap();
        assert_eq!(a, sample_parameters(50, &b, 3).unwrap());
        assert!(a.iter().all(|p| (0.0..1.0).contains(&p[0]) && (1.0..2.0).contains(&p[1])));
        let d = sample_parameters(5, &[(0.25, 0.25)], 1).unwrap();
        assert!(d.iter().all(|p| p[0] == 0.25));
        assert!(sample_parameters(5, &[(1.0, 0.0)], 1).is_err());
        assert!(sample_parameters(0, &b, 1).is_err());
    }

    #[test]
    fn uniform_mean() {
        let s = sample_parameters(10_000, &[(0.0, 1.0)], 2024).unwrap();
        let mean = s.iter().map(|p| p[0]).sum::<f64>() / 1e4;
        assert!((mean - 0.5).abs() < 0.02);
    }
}
