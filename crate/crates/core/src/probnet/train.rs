//! Mini-batch Adam training shared by the LSTM and the feed-forward baseline.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{clip_grad_norm, AdamState};
use super::network::{self, HeadType, NetConfig, NetworkParams};
use crate::error::{Error, Result};
use crate::panel::TrainingWindow;

/// Optimisation and windowing hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub gradient_clip_norm: f64,
    pub rng_seed: u64,
    pub context_len: usize,
    pub horizon: usize,
    pub stride: usize,
    pub head_type: HeadType,
    pub hidden: usize,
    pub layers: usize,
    pub calendar: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 64,
            learning_rate: 1e-3,
            gradient_clip_norm: 10.0,
            rng_seed: 0,
            context_len: 48,
            horizon: 48,
            stride: 2,
            head_type: HeadType::StudentT,
            hidden: 25,
            layers: 2,
            calendar: false,
        }
    }
}

impl TrainConfig {
    pub fn net_config(&self) -> NetConfig {
        NetConfig {
            hidden: self.hidden,
            layers: self.layers,
            head: self.head_type,
            calendar: self.calendar,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("train config: {what}")));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.gradient_clip_norm >= 0.0) {
            return bad("gradient_clip_norm must be >= 0");
        }
        if self.context_len == 0 || self.horizon == 0 || self.stride == 0 {
            return bad("context_len, horizon and stride must be >= 1");
        }
        if self.hidden == 0 || self.layers == 0 {
            return bad("hidden and layers must be >= 1");
        }
        Ok(())
    }
}

/// A model whose window loss and gradient are available in closed form.
pub trait WindowModel: Sync {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn loss_and_grad(&self, window: &TrainingWindow) -> Result<(f64, Vec<f64>)>;
}

impl WindowModel for NetworkParams {
    fn params(&self) -> &[f64] {
        self.as_slice()
    }

    fn params_mut(&mut self) -> &mut [f64] {
        self.as_mut_slice()
    }

    fn loss_and_grad(&self, window: &TrainingWindow) -> Result<(f64, Vec<f64>)> {
        network::loss_and_grad(window, self)
    }
}

/// Runs shuffled mini-batch Adam and returns the mean loss of every epoch.
///
/// Per-window gradients are computed in parallel and summed in batch order,
/// so results do not depend on the thread count.
pub fn fit<M: WindowModel>(model: &mut M, windows: &[TrainingWindow], cfg: &TrainConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if windows.is_empty() {
        return Err(Error::Config("no training windows".into()));
    }
    let n_params = model.params().len();
    let mut adam = AdamState::new(n_params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut grad = vec![0.0; n_params];

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let m: &M = model;
            let results: Vec<Result<(f64, Vec<f64>)>> = batch
                .par_iter()
                .map(|&i| m.loss_and_grad(&windows[i]))
                .collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            for r in results {
                let (loss, g) = r.map_err(|e| Error::Train {
                    epoch,
                    reason: e.to_string(),
                })?;
                epoch_loss += loss;
                for (acc, v) in grad.iter_mut().zip(&g) {
                    *acc += v;
                }
            }
            let inv = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            let norm = clip_grad_norm(&mut grad, cfg.gradient_clip_norm);
            if !norm.is_finite() {
                return Err(Error::Train {
                    epoch,
                    reason: "non-finite gradient".into(),
                });
            }
            adam.step(model.params_mut(), &grad, cfg.learning_rate);
        }
        let mean = epoch_loss / windows.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Train {
                epoch,
                reason: "loss is NaN".into(),
            });
        }
        curve.push(mean);
    }
    Ok(curve)
}

/// Trains the global LSTM from a fresh seeded initialisation.
pub fn train_network(windows: &[TrainingWindow], cfg: &TrainConfig) -> Result<(NetworkParams, Vec<f64>)> {
    cfg.validate()?;
    let mut params = NetworkParams::init(cfg.net_config(), cfg.rng_seed);
    let curve = fit(&mut params, windows, cfg)?;
    Ok((params, curve))
}
