mod common;

use common::{gaussian, net_gradient_error, random_net, rng};
use poddlrom::linalg::DenseMatrix;
use poddlrom::neural::{
    train, AdamState, DenseLayer, Layer, Network, Objective, ParamSet, ResidualLayer, TrainConfig,
};
use poddlrom::Result;

#[test]
fn backprop_matches_finite_differences() {
    for seed in 0..20 {
        let net = random_net(seed);
        let err = net_gradient_error(&net, 1000 + seed);
        assert!(err <= 1e-5, "seed {seed}: {err}");
    }
}

#[test]
fn two_layer_net_matches_hand_unrolled_arithmetic() {
    let mut r = rng(5);
    let l1 = DenseLayer::init(3, 4, true, &mut r);
    let l2 = DenseLayer::init(4, 2, false, &mut r);
    let net = Network::new(vec![Layer::Dense(l1.clone()), Layer::Dense(l2.clone())], 0.1).unwrap();
    let x = [0.3, -1.2, 0.7];
    let mut h = [0.0; 4];
    for i in 0..4 {
        let mut s = l1.b[i];
        for j in 0..3 {
            s += l1.w[i * 3 + j] * x[j];
        }
        h[i] = if s >= 0.0 { s } else { 0.1 * s };
    }
    let y = net.predict_one(&x).unwrap();
    for i in 0..2 {
        let mut s = l2.b[i];
        for j in 0..4 {
            s += l2.w[i * 4 + j] * h[j];
        }
        assert!((y[i] - s).abs() <= 1e-12);
    }
}

#[test]
fn duplicated_batch_doubles_the_gradient() {
    let net = random_net(3);
    let x1 = gaussian(1, net.input_dim(), 8);
    let mut both = x1.data().to_vec();
    both.extend_from_slice(x1.data());
    let x2 = DenseMatrix::from_row_major(2, net.input_dim(), both).unwrap();
    let grad_of = |x: &DenseMatrix| {
        let (y, cache) = net.forward(x).unwrap();
        let dy = DenseMatrix::from_row_major(y.rows(), y.cols(), vec![1.0; y.rows() * y.cols()]).unwrap();
        let mut g = vec![0.0; net.n_params()];
        net.backward(&cache, &dy, &mut g).unwrap();
        g
    };
    let g1 = grad_of(&x1);
    let g2 = grad_of(&x2);
    for (a, b) in g1.iter().zip(&g2) {
        assert_eq!(2.0 * a, *b);
    }
}

#[test]
fn active_weight_counts() {
    let mut r = rng(1);
    let d = Network::new(vec![Layer::Dense(DenseLayer::init(2, 5, false, &mut r))], 0.1).unwrap();
    assert_eq!(d.count_active_weights(), 15);
    let res = Network::new(vec![Layer::Residual(ResidualLayer::init(20, 5, &mut r))], 0.1).unwrap();
    assert_eq!(res.count_active_weights(), 205);
    let both = Network::new(
        vec![
            Layer::Dense(DenseLayer::init(2, 20, true, &mut r)),
            Layer::Residual(ResidualLayer::init(20, 5, &mut r)),
        ],
        0.1,
    )
    .unwrap();
    assert_eq!(both.count_active_weights(), 60 + 205);
}

#[test]
fn adam_trajectories_are_deterministic() {
    let run = || {
        let mut p = vec![0.5, -0.25, 1.0];
        let mut a = AdamState::new(3, 1e-2);
        for k in 0..10 {
            let g: Vec<f64> = p.iter().map(|x| 2.0 * x + k as f64 * 0.1).collect();
            a.step(&mut p, &g).unwrap();
        }
        p
    };
    assert_eq!(run(), run());
}

#[test]
fn first_adam_step_by_hand() {
    let mut p: Vec<f64> = vec![0.0];
    let mut a = AdamState::new(1, 1e-3);
    a.step(&mut p, &[1.0]).unwrap();
    // m̂ = 1, v̂ = 1 after bias correction
    let expected = -1e-3 * 1.0 / (1.0 + 1e-8);
    assert!((p[0] - expected).abs() <= 1e-15);
}

/// Squared error of a 1→1 linear network on fixed points.
struct LineFit {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Objective for LineFit {
    type Params = Network;

    fn n_samples(&self) -> usize {
        self.x.len()
    }

    fn loss(&self, net: &Network, idx: &[usize], grad: Option<&mut [f64]>) -> Result<f64> {
        let xs = DenseMatrix::from_row_major(idx.len(), 1, idx.iter().map(|&i| self.x[i]).collect())?;
        let (pred, cache) = net.forward(&xs)?;
        let b = idx.len() as f64;
        let mut dy = pred.clone();
        let mut loss = 0.0;
        for (k, &i) in idx.iter().enumerate() {
            let r = pred.get(k, 0) - self.y[i];
            loss += r * r / b;
            dy.set(k, 0, 2.0 * r / b);
        }
        if let Some(g) = grad {
            net.backward(&cache, &dy, g)?;
        }
        Ok(loss)
    }
}

#[test]
fn linear_regression_recovers_least_squares_line() {
    let mut r = rng(2);
    let x: Vec<f64> = (0..200).map(|i| i as f64 / 100.0 - 1.0).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&t| 1.7 * t - 0.4 + 0.05 * rand::Rng::sample::<f64, _>(&mut r, rand_distr::StandardNormal))
        .collect();
    // least-squares oracle
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let net = Network::new(vec![Layer::Dense(DenseLayer::init(1, 1, false, &mut r))], 0.1).unwrap();
    let cfg = TrainConfig {
        lr: 1e-2,
        lr_decay: 0.999,
        batch: 200,
        max_epochs: 5000,
        patience: 5000,
        val_fraction: 0.01,
        ..TrainConfig::default()
    };
    let (fit, log) = train(net, &LineFit { x, y }, &cfg).unwrap();
    let p = fit.flat_params();
    assert!((p[0] - slope).abs() <= 1e-3, "slope {} vs {slope} after {} epochs", p[0], log.records.len());
    assert!((p[1] - intercept).abs() <= 1e-3, "intercept {} vs {intercept}", p[1]);
}
