use super::network::ParamSet;
use crate::error::{dim_err, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One bias-corrected Adam update of `params` along `grads`.
    pub fn step(&mut self, params: &mut impl ParamSet, grads: &[f64]) -> Result<()> {
        if grads.len() != self.m.len() || params.n_params() != self.m.len() {
            return dim_err(format!(
                "optimizer sized for {} parameters, got {} parameters and {} gradients",
                self.m.len(),
                params.n_params(),
                grads.len()
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let mut idx = 0;
        for block in params.param_blocks_mut() {
            for p in block.iter_mut() {
                let g = grads[idx];
                let m = self.beta1 * self.m[idx] + (1.0 - self.beta1) * g;
                let v = self.beta2 * self.v[idx] + (1.0 - self.beta2) * g * g;
                self.m[idx] = m;
                self.v[idx] = v;
                let m_hat = m / c1;
                let v_hat = v / c2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                idx += 1;
            }
        }
        Ok(())
    }
}
