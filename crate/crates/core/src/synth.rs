//! Synthetic panels with a known intervention effect.
//!
//! Each unit is `base + offset_j + amplitude * sin(2 pi t / S) + slope * t + noise`
//! with Gaussian noise. After `t0` the treated units pass through a monotone
//! map (a uniform ratio, or a shift confined to the troughs or peaks), so the
//! true per-quantile effect is known and can be recovered by Monte Carlo.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{parse_timestamp, Panel, Role, UnitSeries};
use crate::probnet::forecast::{path_rng, quantile, quantile_sorted};

/// Monte-Carlo sample size of [`oracle_quantile_effect`].
pub const ORACLE_DRAWS: usize = 1_000_000;

const ORACLE_KEY: u64 = 0x5eed_0ac1e;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EffectSpec {
    None,
    /// `v -> ratio * v`.
    Multiplicative { ratio: f64 },
    /// `v -> v + delta` for values below the pre-period `tau_star` quantile.
    Trough { delta: f64, tau_star: f64 },
    /// `v -> v + delta` for values above the pre-period `tau_star` quantile.
    Peak { delta: f64, tau_star: f64 },
}

impl EffectSpec {
    fn apply(&self, v: f64, threshold: f64) -> f64 {
        match *self {
            EffectSpec::None => v,
            EffectSpec::Multiplicative { ratio } => ratio * v,
            EffectSpec::Trough { delta, .. } => {
                if v < threshold {
                    v + delta
                } else {
                    v
                }
            }
            EffectSpec::Peak { delta, .. } => {
                if v > threshold {
                    v + delta
                } else {
                    v
                }
            }
        }
    }

    fn tau_star(&self) -> Option<f64> {
        match *self {
            EffectSpec::Trough { tau_star, .. } | EffectSpec::Peak { tau_star, .. } => Some(tau_star),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_treated: usize,
    pub n_control: usize,
    pub length: usize,
    /// Number of pre-intervention steps.
    pub t0: usize,
    pub period: usize,
    pub amplitude: f64,
    pub base_level: f64,
    pub trend_slope: f64,
    pub noise_sigma: f64,
    /// Unit offsets are drawn uniformly in `±offset_spread * base_level`.
    pub offset_spread: f64,
    pub effect: EffectSpec,
    pub seed: u64,
    pub start: String,
    pub step_secs: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_treated: 4,
            n_control: 2,
            length: 2160,
            t0: 1800,
            period: 24,
            amplitude: 200.0,
            base_level: 1000.0,
            trend_slope: 0.0,
            noise_sigma: 10.0,
            offset_spread: 0.2,
            effect: EffectSpec::Multiplicative { ratio: 0.9 },
            seed: 7,
            start: "2020-01-01T00:00:00+00:00".into(),
            step_secs: 3600,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_treated == 0 || self.n_control == 0 {
            return Err(Error::Config("synth needs treated and control units".into()));
        }
        if !(self.t0 > 1 && self.t0 < self.length) {
            return Err(Error::Config("synth t0 must satisfy 1 < t0 < length".into()));
        }
        if self.period == 0 || self.noise_sigma < 0.0 || self.step_secs <= 0 {
            return Err(Error::Config("synth period, noise and step must be positive".into()));
        }
        if let Some(t) = self.effect.tau_star() {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config("effect tau_star must lie in (0, 1)".into()));
            }
        }
        if parse_timestamp(&self.start).is_none() {
            return Err(Error::Config(format!("bad synth start `{}`", self.start)));
        }
        Ok(())
    }

    pub fn unit_ids(&self) -> Vec<(String, Role)> {
        (0..self.n_treated)
            .map(|i| (format!("treated_{i}"), Role::Treated))
            .chain((0..self.n_control).map(|i| (format!("control_{i}"), Role::Control)))
            .collect()
    }

    fn deterministic(&self, offset: f64, t: usize) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * (t % self.period) as f64 / self.period as f64;
        self.base_level + offset + self.amplitude * phase.sin() + self.trend_slope * t as f64
    }
}

/// Per-unit constants needed to reproduce the generative law.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitTruth {
    pub unit_id: String,
    pub role: Role,
    pub offset: f64,
    /// Effect threshold (pre-period `tau_star` quantile) for trough/peak specs.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub units: Vec<UnitTruth>,
}

/// Generates the panel and the constants of its generative law.
pub fn generate_panel(cfg: &SynthConfig) -> Result<(Panel, GroundTruth)> {
    cfg.validate()?;
    let start = parse_timestamp(&cfg.start).expect("validated");
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut units = Vec::new();
    let mut truths = Vec::new();
    for (j, (unit_id, role)) in cfg.unit_ids().into_iter().enumerate() {
        let mut rng = path_rng(cfg.seed, j as u64);
        let offset = cfg.offset_spread * cfg.base_level * rng.random_range(-1.0..1.0);
        let mut values: Vec<f64> = (0..cfg.length)
            .map(|t| cfg.deterministic(offset, t) + noise.sample(&mut rng))
            .collect();
        let threshold = cfg
            .effect
            .tau_star()
            .map(|tau| quantile(&values[..cfg.t0], tau))
            .unwrap_or(f64::NAN);
        if role == Role::Treated {
            for v in &mut values[cfg.t0..] {
                *v = cfg.effect.apply(*v, threshold);
            }
        }
        truths.push(UnitTruth {
            unit_id: unit_id.clone(),
            role,
            offset,
            threshold,
        });
        units.push(UnitSeries {
            unit_id,
            role,
            values,
        });
    }
    let panel = Panel::new(
        units,
        start.timestamp(),
        cfg.step_secs,
        start.offset().local_minus_utc(),
        cfg.t0,
    )?;
    Ok((panel, GroundTruth { units: truths }))
}

/// True per-quantile effect of one treated unit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueEffect {
    pub unit_id: String,
    pub tau_grid: Vec<f64>,
    /// Post-intervention quantile with the effect minus without it.
    pub effect: Vec<f64>,
    /// Effect-free post-intervention quantiles.
    pub counterfactual: Vec<f64>,
}

impl TrueEffect {
    pub fn pct_change(&self) -> Vec<f64> {
        self.effect
            .iter()
            .zip(&self.counterfactual)
            .map(|(d, q)| 100.0 * d / q)
            .collect()
    }
}

/// Brute-force Monte-Carlo oracle of the true per-quantile effect for every treated unit.
///
/// Draws `ORACLE_DRAWS` post-period values per unit from the generative law,
/// applies the effect map, and differences the two empirical quantile functions.
pub fn oracle_quantile_effect(cfg: &SynthConfig, truth: &GroundTruth, tau_grid: &[f64]) -> Result<Vec<TrueEffect>> {
    oracle_with_draws(cfg, truth, tau_grid, ORACLE_DRAWS)
}

pub fn oracle_with_draws(
    cfg: &SynthConfig,
    truth: &GroundTruth,
    tau_grid: &[f64],
    draws: usize,
) -> Result<Vec<TrueEffect>> {
    cfg.validate()?;
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut out = Vec::new();
    for (j, u) in truth.units.iter().enumerate() {
        if u.role != Role::Treated {
            continue;
        }
        let mut rng = path_rng(cfg.seed ^ ORACLE_KEY, j as u64);
        let mut base: Vec<f64> = (0..draws)
            .map(|_| {
                let t = rng.random_range(cfg.t0..cfg.length);
                cfg.deterministic(u.offset, t) + noise.sample(&mut rng)
            })
            .collect();
        let mut treated: Vec<f64> = base.iter().map(|&v| cfg.effect.apply(v, u.threshold)).collect();
        base.sort_by(f64::total_cmp);
        treated.sort_by(f64::total_cmp);
        let counterfactual: Vec<f64> = tau_grid.iter().map(|&t| quantile_sorted(&base, t)).collect();
        let effect = tau_grid
            .iter()
            .zip(&counterfactual)
            .map(|(&t, q0)| quantile_sorted(&treated, t) - q0)
            .collect();
        out.push(TrueEffect {
            unit_id: u.unit_id.clone(),
            tau_grid: tau_grid.to_vec(),
            effect,
            counterfactual,
        });
    }
    Ok(out)
}
