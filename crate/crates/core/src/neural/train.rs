use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::network::ParamSet;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight of the coefficient reconstruction loss.
    #[serde(rename = "omega_N")]
    pub omega_big: f64,
    /// Weight of the latent consistency loss.
    #[serde(rename = "omega_n")]
    pub omega_small: f64,
    pub lr: f64,
    pub lr_decay: f64,
    pub batch: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            omega_big: 0.5,
            omega_small: 0.5,
            lr: 1e-3,
            lr_decay: 0.999,
            batch: 20,
            max_epochs: 20_000,
            patience: 200,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.omega_big >= 0.0 && self.omega_small >= 0.0 && self.omega_big + self.omega_small > 0.0) {
            return bad(format!(
                "loss weights must be nonnegative with positive sum, got {} and {}",
                self.omega_big, self.omega_small
            ));
        }
        if self.batch == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad(format!("validation fraction must lie in (0,1), got {}", self.val_fraction));
        }
        if !(self.lr > 0.0 && self.lr_decay > 0.0) {
            return bad("learning rate and its decay must be positive".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        Ok(())
    }
}

/// Minibatch loss of some parameter set over indexed training samples.
pub trait Objective {
    type Params: ParamSet + Clone;

    fn n_samples(&self) -> usize;

    /// Mean loss over the samples `idx`; when `grad` is given, the gradient of that
    /// mean is added into it.
    fn loss(&self, params: &Self::Params, idx: &[usize], grad: Option<&mut [f64]>) -> Result<f64>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val: f64,
    pub stopped_early: bool,
}

/// Splits shuffled sample indices into (train, validation); validation is the last share.
pub fn split_indices(n: usize, val_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples for a train/validation split, got {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((n as f64 * val_fraction).round() as usize).clamp(1, n - 1);
    let val = idx.split_off(n - n_val);
    Ok((idx, val))
}

/// Minibatch Adam with per-epoch learning-rate decay and early stopping on the
/// validation loss; returns the best-validation parameters.
pub fn train<O: Objective>(mut params: O::Params, objective: &O, cfg: &TrainConfig) -> Result<(O::Params, TrainLog)> {
    cfg.validate()?;
    let (mut train_idx, val_idx) = split_indices(objective.n_samples(), cfg.val_fraction, cfg.seed)?;
    // separate stream so the split does not depend on epoch shuffles
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_e90c);
    let mut adam = AdamState::new(params.n_params(), cfg.lr);
    let mut grad = vec![0.0; params.n_params()];
    let mut best = params.clone();
    let mut log = TrainLog {
        best_val: f64::INFINITY,
        ..Default::default()
    };
    let mut since_best = 0usize;
    for epoch in 1..=cfg.max_epochs {
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in train_idx.chunks(cfg.batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let l = objective.loss(&params, chunk, Some(&mut grad))?;
            if !l.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, loss: l });
            }
            total += l * chunk.len() as f64;
            adam.step(&mut params, &grad)?;
        }
        let train_loss = total / train_idx.len() as f64;
        let val_loss = objective.loss(&params, &val_idx, None)?;
        if !val_loss.is_finite() {
            return Err(Error::Diverged { epoch, loss: val_loss });
        }
        log.records.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            lr: adam.lr,
        });
        if val_loss < log.best_val {
            log.best_val = val_loss;
            log.best_epoch = epoch;
            best = params.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                log.stopped_early = true;
                break;
            }
        }
        adam.lr *= cfg.lr_decay;
    }
    Ok((best, log))
}
