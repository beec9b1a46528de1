use rand::Rng;

use super::activation::DEFAULT_ALPHA;
use super::layer::{DenseLayer, Layer, LayerCache, ResidualLayer};
use crate::error::{dim_err, Error, Result};
use crate::linalg::DenseMatrix;

/// Anything whose trainable scalars can be visited in a fixed order.
pub trait ParamSet {
    fn param_blocks(&self) -> Vec<&[f64]>;
    fn param_blocks_mut(&mut self) -> Vec<&mut [f64]>;

    fn n_params(&self) -> usize {
        self.param_blocks().iter().map(|b| b.len()).sum()
    }

    fn flat_params(&self) -> Vec<f64> {
        self.param_blocks().concat()
    }
}

impl ParamSet for Vec<f64> {
    fn param_blocks(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }

    fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }
}

/// Ordered stack of dense and residual layers sharing one LeakyReLU slope.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub alpha: f64,
}

pub type ForwardCache = Vec<LayerCache>;

impl Network {
    pub fn new(layers: Vec<Layer>, alpha: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("LeakyReLU slope must lie in (0,1), got {alpha}")));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].n_out() != pair[1].n_in() {
                return dim_err(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    pair[0].n_out(),
                    i + 1,
                    pair[1].n_in()
                ));
            }
        }
        Ok(Self { layers, alpha })
    }

    /// Dense net through `widths` (input first); hidden layers activated, last one linear.
    pub fn mlp(widths: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid layer widths {widths:?}")));
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Layer::Dense(DenseLayer::init(w[0], w[1], i < last, rng)))
            .collect();
        Self::new(layers, DEFAULT_ALPHA)
    }

    /// `n_in -> width` (activated hidden layers) repeated `depth` times, then linear to `n_out`.
    pub fn with_hidden(n_in: usize, width: usize, depth: usize, n_out: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut widths = vec![n_in];
        widths.extend(std::iter::repeat_n(width, depth));
        widths.push(n_out);
        Self::mlp(&widths, rng)
    }

    pub fn push_residual(&mut self, k: usize, rng: &mut impl Rng) -> Result<()> {
        let n = self.output_dim();
        self.layers.push(Layer::Residual(ResidualLayer::init(n, k, rng)));
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out()
    }

    /// Total weights and biases.
    pub fn count_active_weights(&self) -> usize {
        self.layers.iter().map(Layer::n_params).sum()
    }

    fn check_input(&self, x: &DenseMatrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return dim_err(format!("network takes {} inputs, got {}", self.input_dim(), x.cols()));
        }
        Ok(())
    }

    /// Forward pass over a batch (one sample per row).
    pub fn predict(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur, self.alpha).0;
        }
        Ok(cur)
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m = DenseMatrix::from_row_major(1, x.len(), x.to_vec())?;
        Ok(self.predict(&m)?.into_data())
    }

    /// Forward pass keeping what `backward` needs.
    pub fn forward(&self, x: &DenseMatrix) -> Result<(DenseMatrix, ForwardCache)> {
        self.check_input(x)?;
        let mut cur = x.clone();
        let mut cache = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (y, c) = layer.forward(&cur, self.alpha);
            cache.push(c);
            cur = y;
        }
        Ok((cur, cache))
    }

    /// Gradients of `Σ_s dy[s] · y[s]` for the batch of the cache: parameter gradients
    /// are added into `grad` (length `n_params`), the input gradient is returned.
    pub fn backward(&self, cache: &ForwardCache, dy: &DenseMatrix, grad: &mut [f64]) -> Result<DenseMatrix> {
        if cache.len() != self.layers.len() {
            return Err(Error::InvalidArgument("forward cache does not belong to this network".into()));
        }
        if grad.len() != self.n_params() {
            return dim_err(format!("gradient buffer {} for {} parameters", grad.len(), self.n_params()));
        }
        if dy.cols() != self.output_dim() || dy.rows() != cache[0].input.rows() {
            return dim_err("output gradient does not match forward batch");
        }
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for l in &self.layers {
            offsets.push(acc);
            acc += l.n_params();
        }
        let mut cur = dy.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let g = &mut grad[offsets[i]..offsets[i] + layer.n_params()];
            cur = layer.backward(&cache[i], &cur, self.alpha, g);
        }
        Ok(cur)
    }
}

impl ParamSet for Network {
    fn param_blocks(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }
}
