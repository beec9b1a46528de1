#![allow(dead_code)]

use nalgebra::DMatrix;
use poddlrom::linalg::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    let data = (0..rows * cols).map(|_| r.sample(StandardNormal)).collect();
    DenseMatrix::from_row_major(rows, cols, data).unwrap()
}

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// Eigenvalues of a symmetric matrix, largest first.
pub fn sym_eigs_desc(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Max-norm error at t = 1 of the manufactured solution for each interval count,
/// with the time step refined together with the grid.
pub fn manufactured_errors(intervals: &[usize]) -> Vec<f64> {
    use poddlrom::solvers::{CrankNicolson, Manufactured};
    intervals
        .iter()
        .map(|&n| {
            let cn = CrankNicolson::new(n + 1, std::f64::consts::PI, 1.0, 8 * n).unwrap();
            let u = cn.solve(&Manufactured, &[1.0]).unwrap();
            u[0].iter()
                .zip(&cn.grid)
                .map(|(v, &x)| (v - Manufactured::exact(x, 1.0)).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Observed orders between consecutive halvings.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

use poddlrom::neural::{DenseLayer, Layer, Network, ParamSet, ResidualLayer};

/// Random stack of dense and residual layers (widths ≤ 8, ≤ 4 layers) with every
/// parameter drawn from N(0, 0.25).
pub fn random_net(seed: u64) -> Network {
    let mut r = rng(seed);
    let depth = r.random_range(1..=4);
    let mut width = r.random_range(1..=8);
    let mut layers = Vec::new();
    for i in 0..depth {
        let last = i + 1 == depth;
        if !last && i > 0 && r.random_bool(0.5) {
            let k = r.random_range(1..=4);
            layers.push(Layer::Residual(ResidualLayer::init(width, k, &mut r)));
        } else {
            let out = r.random_range(1..=8);
            layers.push(Layer::Dense(DenseLayer::init(width, out, !last, &mut r)));
            width = out;
        }
    }
    let mut net = Network::new(layers, 0.1).unwrap();
    for block in net.param_blocks_mut() {
        for p in block.iter_mut() {
            *p = 0.5 * r.sample::<f64, _>(StandardNormal);
        }
    }
    net
}

/// Max per-coordinate relative difference between `analytic` and a central
/// difference of `f` with step `h`.
pub fn fd_max_rel_err<P: ParamSet + Clone>(params: &P, f: impl Fn(&P) -> f64, analytic: &[f64], h: f64) -> f64 {
    let n = params.n_params();
    assert_eq!(analytic.len(), n);
    let mut worst = 0.0_f64;
    for i in 0..n {
        let bump = |delta: f64| {
            let mut q = params.clone();
            let mut idx = i;
            for block in q.param_blocks_mut() {
                if idx < block.len() {
                    block[idx] += delta;
                    break;
                }
                idx -= block.len();
            }
            f(&q)
        };
        let fd = (bump(h) - bump(-h)) / (2.0 * h);
        let scale = fd.abs().max(analytic[i].abs()).max(1e-6);
        worst = worst.max((fd - analytic[i]).abs() / scale);
    }
    worst
}

/// Gradient check of a network under the loss `Σ c ∘ net(x)` on a random batch.
pub fn net_gradient_error(net: &Network, seed: u64) -> f64 {
    let x = gaussian(3, net.input_dim(), seed);
    let c = gaussian(3, net.output_dim(), seed + 1);
    let loss = |n: &Network| -> f64 {
        let y = n.predict(&x).unwrap();
        y.data().iter().zip(c.data()).map(|(a, b)| a * b).sum()
    };
    let (_, cache) = net.forward(&x).unwrap();
    let mut grad = vec![0.0; net.n_params()];
    net.backward(&cache, &c, &mut grad).unwrap();
    fd_max_rel_err(net, loss, &grad, 1e-5)
}
