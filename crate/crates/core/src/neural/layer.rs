use rand::Rng;

use super::activation::{leaky_relu, leaky_relu_deriv};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{axpy, dot, DenseMatrix};

/// Affine map `W x + b`, optionally followed by the activation.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    /// `n_out x n_in`, row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub activated: bool,
}

/// `z + W1 σ(W0 z + b)` with `W0: k x n`, `W1: n x k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualLayer {
    pub n: usize,
    pub k: usize,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Dense(DenseLayer),
    Residual(ResidualLayer),
}

fn glorot(rng: &mut impl Rng, fan_in: usize, fan_out: usize, len: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.random_range(-limit..=limit)).collect()
}

impl DenseLayer {
    pub fn new(w: Vec<f64>, b: Vec<f64>, n_in: usize, n_out: usize, activated: bool) -> Result<Self> {
        if w.len() != n_in * n_out || b.len() != n_out {
            return dim_err(format!(
                "dense layer {n_in}->{n_out} got {} weights and {} biases",
                w.len(),
                b.len()
            ));
        }
        if w.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("dense layer parameter".into()));
        }
        Ok(Self {
            n_in,
            n_out,
            w,
            b,
            activated,
        })
    }

    pub fn init(n_in: usize, n_out: usize, activated: bool, rng: &mut impl Rng) -> Self {
        Self {
            n_in,
            n_out,
            w: glorot(rng, n_in, n_out, n_in * n_out),
            b: vec![0.0; n_out],
            activated,
        }
    }
}

impl ResidualLayer {
    pub fn new(w0: Vec<f64>, w1: Vec<f64>, b: Vec<f64>, n: usize, k: usize) -> Result<Self> {
        if w0.len() != k * n || w1.len() != n * k || b.len() != k {
            return dim_err(format!("residual layer n={n}, k={k} has inconsistent parameter lengths"));
        }
        if w0.iter().chain(&w1).chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("residual layer parameter".into()));
        }
        Ok(Self { n, k, w0, w1, b })
    }

    pub fn init(n: usize, k: usize, rng: &mut impl Rng) -> Self {
        Self {
            n,
            k,
            w0: glorot(rng, n, k, k * n),
            w1: glorot(rng, k, n, n * k),
            b: vec![0.0; k],
        }
    }
}

/// Values a layer keeps from the forward pass for its backward pass.
#[derive(Clone, Debug)]
pub struct LayerCache {
    pub input: DenseMatrix,
    /// Pre-activation values (`n_out` wide for dense, `k` wide for residual).
    pub pre: DenseMatrix,
}

/// `out[s, i] = Σ_j x[s, j] w[i, j] + b[i]` for a row-major `w` of shape `rows x x.cols()`.
fn affine(x: &DenseMatrix, w: &[f64], b: &[f64], rows: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(x.rows(), rows);
    let cols = x.cols();
    for s in 0..x.rows() {
        let xs = x.row(s);
        let o = out.row_mut(s);
        for i in 0..rows {
            o[i] = dot(&w[i * cols..(i + 1) * cols], xs) + b[i];
        }
    }
    out
}

impl Layer {
    pub fn n_in(&self) -> usize {
        match self {
            Layer::Dense(d) => d.n_in,
            Layer::Residual(r) => r.n,
        }
    }

    pub fn n_out(&self) -> usize {
        match self {
            Layer::Dense(d) => d.n_out,
            Layer::Residual(r) => r.n,
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            Layer::Dense(d) => d.w.len() + d.b.len(),
            Layer::Residual(r) => r.w0.len() + r.w1.len() + r.b.len(),
        }
    }

    /// Parameter blocks in a fixed order (dense: W, b; residual: W0, W1, b).
    pub fn params(&self) -> Vec<&[f64]> {
        match self {
            Layer::Dense(d) => vec![&d.w, &d.b],
            Layer::Residual(r) => vec![&r.w0, &r.w1, &r.b],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Layer::Dense(d) => vec![&mut d.w, &mut d.b],
            Layer::Residual(r) => vec![&mut r.w0, &mut r.w1, &mut r.b],
        }
    }

    pub fn forward(&self, x: &DenseMatrix, alpha: f64) -> (DenseMatrix, LayerCache) {
        match self {
            Layer::Dense(d) => {
                let pre = affine(x, &d.w, &d.b, d.n_out);
                let mut y = pre.clone();
                if d.activated {
                    y.data_mut().iter_mut().for_each(|v| *v = leaky_relu(*v, alpha));
                }
                (y, LayerCache { input: x.clone(), pre })
            }
            Layer::Residual(r) => {
                let pre = affine(x, &r.w0, &r.b, r.k);
                let mut y = x.clone();
                for s in 0..x.rows() {
                    let a: Vec<f64> = pre.row(s).iter().map(|&v| leaky_relu(v, alpha)).collect();
                    let ys = y.row_mut(s);
                    for i in 0..r.n {
                        ys[i] += dot(&r.w1[i * r.k..(i + 1) * r.k], &a);
                    }
                }
                (y, LayerCache { input: x.clone(), pre })
            }
        }
    }

    /// Accumulates parameter gradients into `grad` (same layout as `params`)
    /// and returns the gradient with respect to the layer input.
    pub fn backward(&self, cache: &LayerCache, dy: &DenseMatrix, alpha: f64, grad: &mut [f64]) -> DenseMatrix {
        let x = &cache.input;
        let batch = x.rows();
        match self {
            Layer::Dense(d) => {
                let (gw, gb) = grad.split_at_mut(d.w.len());
                let mut dx = DenseMatrix::zeros(batch, d.n_in);
                let mut dz = vec![0.0; d.n_out];
                for s in 0..batch {
                    let dys = dy.row(s);
                    let pre = cache.pre.row(s);
                    for i in 0..d.n_out {
                        dz[i] = if d.activated {
                            dys[i] * leaky_relu_deriv(pre[i], alpha)
                        } else {
                            dys[i]
                        };
                    }
                    let xs = x.row(s);
                    let dxs = dx.row_mut(s);
                    for (i, &g) in dz.iter().enumerate() {
                        if g == 0.0 {
                            continue;
                        }
                        gb[i] += g;
                        axpy(g, xs, &mut gw[i * d.n_in..(i + 1) * d.n_in]);
                        axpy(g, &d.w[i * d.n_in..(i + 1) * d.n_in], dxs);
                    }
                }
                dx
            }
            Layer::Residual(r) => {
                let (gw0, rest) = grad.split_at_mut(r.w0.len());
                let (gw1, gb) = rest.split_at_mut(r.w1.len());
                let mut dx = dy.clone();
                let mut a = vec![0.0; r.k];
                let mut da = vec![0.0; r.k];
                for s in 0..batch {
                    let pre = cache.pre.row(s);
                    for j in 0..r.k {
                        a[j] = leaky_relu(pre[j], alpha);
                    }
                    da.iter_mut().for_each(|v| *v = 0.0);
                    let dys = dy.row(s);
                    for i in 0..r.n {
                        let g = dys[i];
                        if g == 0.0 {
                            continue;
                        }
                        let w1row = &r.w1[i * r.k..(i + 1) * r.k];
                        axpy(g, &a, &mut gw1[i * r.k..(i + 1) * r.k]);
                        axpy(g, w1row, &mut da);
                    }
                    let xs = x.row(s);
                    let dxs = dx.row_mut(s);
                    for j in 0..r.k {
                        let g = da[j] * leaky_relu_deriv(pre[j], alpha);
                        if g == 0.0 {
                            continue;
                        }
                        gb[j] += g;
                        axpy(g, xs, &mut gw0[j * r.n..(j + 1) * r.n]);
                        axpy(g, &r.w0[j * r.n..(j + 1) * r.n], dxs);
                    }
                }
                dx
            }
        }
    }
}
