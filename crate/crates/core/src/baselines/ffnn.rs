//! One-hidden-layer perceptron mapping a scaled context window straight to
//! per-step distribution parameters over the whole target range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{compute_scale, TrainingWindow};
use crate::probnet::forecast::{draw, path_rng};
use crate::probnet::network::{distribution_head, head_loss};
use crate::probnet::train::{fit, TrainConfig, WindowModel};
use crate::probnet::{ForecastDistribution, HeadType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FfnnConfig {
    pub context_len: usize,
    pub horizon: usize,
    pub hidden: usize,
    pub head: HeadType,
}

impl FfnnConfig {
    pub fn new(context_len: usize, horizon: usize) -> Self {
        Self {
            context_len,
            horizon,
            hidden: 40,
            head: HeadType::StudentT,
        }
    }

    /// `(name, rows, cols)` in storage order.
    pub fn param_shapes(&self) -> Vec<(String, usize, usize)> {
        vec![
            ("hidden.weight".into(), self.hidden, self.context_len),
            ("hidden.bias".into(), self.hidden, 1),
            ("out.weight".into(), 3 * self.horizon, self.hidden),
            ("out.bias".into(), 3 * self.horizon, 1),
        ]
    }

    pub fn num_params(&self) -> usize {
        self.param_shapes().iter().map(|(_, r, c)| r * c).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FfnnParams {
    cfg: FfnnConfig,
    data: Vec<f64>,
}

impl FfnnParams {
    /// Uniform `±1/sqrt(fan_in)` initialisation.
    pub fn init(cfg: FfnnConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(cfg.num_params());
        for (_, r, c) in cfg.param_shapes() {
            let fan_in = if c == 1 { cfg.context_len.max(1) } else { c };
            let k = 1.0 / (fan_in as f64).sqrt();
            data.extend((0..r * c).map(|_| rng.random_range(-k..k)));
        }
        Self { cfg, data }
    }

    pub fn from_flat(cfg: FfnnConfig, data: Vec<f64>) -> Result<Self> {
        if data.len() != cfg.num_params() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                cfg.num_params(),
                data.len()
            )));
        }
        Ok(Self { cfg, data })
    }

    pub fn config(&self) -> &FfnnConfig {
        &self.cfg
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let (h, c, o) = (self.cfg.hidden, self.cfg.context_len, 3 * self.cfg.horizon);
        let (w1, rest) = self.data.split_at(h * c);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(o * h);
        (w1, b1, w2, b2)
    }

    /// Hidden activations and raw outputs (`3h`, grouped per step) for a scaled context.
    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (w1, b1, w2, b2) = self.split();
        let c = self.cfg.context_len;
        let hid: Vec<f64> = (0..self.cfg.hidden)
            .map(|j| {
                let z = b1[j] + w1[j * c..(j + 1) * c].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                z.max(0.0)
            })
            .collect();
        let hd = hid.len();
        let raw = (0..3 * self.cfg.horizon)
            .map(|r| b2[r] + w2[r * hd..(r + 1) * hd].iter().zip(&hid).map(|(w, v)| w * v).sum::<f64>())
            .collect();
        (hid, raw)
    }

    fn check_window(&self, w: &TrainingWindow) -> Result<()> {
        if w.context.len() != self.cfg.context_len || w.target.len() != self.cfg.horizon {
            return Err(Error::Shape(format!(
                "window {}+{} does not match network {}+{}",
                w.context.len(),
                w.target.len(),
                self.cfg.context_len,
                self.cfg.horizon
            )));
        }
        Ok(())
    }

    /// Mean scaled NLL over the target range.
    pub fn loss(&self, w: &TrainingWindow) -> Result<f64> {
        Ok(self.loss_and_grad(w)?.0)
    }
}

/// The output layer is read three raw values at a time, like the recurrent head.
fn step_head(raw: &[f64]) -> (crate::probnet::DistParams, [f64; 3]) {
    distribution_head(&[1.0], &[0.0, 0.0, 0.0], raw)
}

impl WindowModel for FfnnParams {
    fn params(&self) -> &[f64] {
        &self.data
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn loss_and_grad(&self, w: &TrainingWindow) -> Result<(f64, Vec<f64>)> {
        self.check_window(w)?;
        let (nh, c, hz) = (self.cfg.hidden, self.cfg.context_len, self.cfg.horizon);
        let inv = 1.0 / w.scale;
        let x: Vec<f64> = w.context.iter().map(|v| v * inv).collect();
        let (hid, raw) = self.forward(&x);
        let mut d_raw = vec![0.0; 3 * hz];
        let mut loss = 0.0;
        for k in 0..hz {
            let (dist, r) = step_head(&raw[3 * k..3 * k + 3]);
            let (nll, d) = head_loss(self.cfg.head, w.target[k] * inv, dist, r);
            if !nll.is_finite() {
                return Err(Error::Numeric(format!("non-finite loss at target step {k}")));
            }
            loss += nll;
            for i in 0..3 {
                d_raw[3 * k + i] = d[i] / hz as f64;
            }
        }
        loss /= hz as f64;

        let mut grad = vec![0.0; self.data.len()];
        let (_, _, w2, _) = self.split();
        let (g_w1, rest) = grad.split_at_mut(nh * c);
        let (g_b1, rest) = rest.split_at_mut(nh);
        let (g_w2, g_b2) = rest.split_at_mut(3 * hz * nh);
        let mut d_hid = vec![0.0; nh];
        for (r, &dr) in d_raw.iter().enumerate() {
            g_b2[r] = dr;
            for j in 0..nh {
                g_w2[r * nh + j] = dr * hid[j];
                d_hid[j] += dr * w2[r * nh + j];
            }
        }
        for j in 0..nh {
            if hid[j] <= 0.0 {
                continue;
            }
            g_b1[j] = d_hid[j];
            for i in 0..c {
                g_w1[j * c + i] = d_hid[j] * x[i];
            }
        }
        Ok((loss, grad))
    }
}

/// Trains the perceptron with the shared Adam loop.
pub fn ffnn_train(windows: &[TrainingWindow], cfg: &TrainConfig, hidden: usize) -> Result<(FfnnParams, Vec<f64>)> {
    cfg.validate()?;
    if hidden == 0 {
        return Err(Error::Config("ffnn hidden width must be >= 1".into()));
    }
    let net_cfg = FfnnConfig {
        hidden,
        head: cfg.head_type,
        ..FfnnConfig::new(cfg.context_len, cfg.horizon)
    };
    let mut params = FfnnParams::init(net_cfg, cfg.rng_seed);
    let curve = fit(&mut params, windows, cfg)?;
    Ok((params, curve))
}

/// Sample paths drawn block by block: each block of `horizon` draws is appended
/// to the path's history and conditions the next block.
pub fn ffnn_forecast(
    params: &FfnnParams,
    unit_id: &str,
    history: &[f64],
    horizon: usize,
    n_samples: usize,
    seed: u64,
    tau_grid: &[f64],
) -> Result<ForecastDistribution> {
    let cfg = params.cfg;
    if horizon == 0 {
        return Err(Error::Config("forecast horizon must be positive".into()));
    }
    if history.len() < cfg.context_len {
        return Err(Error::Config(format!(
            "history of {} values is shorter than context length {}",
            history.len(),
            cfg.context_len
        )));
    }
    let start = &history[history.len() - cfg.context_len..];
    let paths: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p as u64);
            let mut buf = start.to_vec();
            while buf.len() < cfg.context_len + horizon {
                let ctx = &buf[buf.len() - cfg.context_len..];
                let scale = compute_scale(ctx);
                let x: Vec<f64> = ctx.iter().map(|v| v / scale).collect();
                let (_, raw) = params.forward(&x);
                for k in 0..cfg.horizon {
                    let (dist, _) = step_head(&raw[3 * k..3 * k + 3]);
                    buf.push(draw(cfg.head, &mut rng, dist) * scale);
                }
            }
            buf[cfg.context_len..cfg.context_len + horizon].to_vec()
        })
        .collect();
    ForecastDistribution::from_samples(unit_id, paths, tau_grid, seed)
}
