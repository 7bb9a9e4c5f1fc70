//! Additive Holt-Winters exponential smoothing.
//!
//! A zero trend or seasonal smoothing weight switches that component off
//! (it is held at zero), so `(1, 0, 0)` is the naive forecast and `(0, 0, 1)`
//! reproduces the last season.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probnet::ForecastDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtsParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EtsParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("ETS {name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtsState {
    pub level: f64,
    pub trend: f64,
    /// Seasonal components indexed by phase `t mod S`; they sum to zero.
    pub seasonal: Vec<f64>,
    pub params: EtsParams,
    /// Length of the fitted history, which fixes the phase of the next step.
    pub n_obs: usize,
    /// One-step in-sample errors after the first season.
    pub residuals: Vec<f64>,
}

impl EtsState {
    pub fn period(&self) -> usize {
        self.seasonal.len()
    }

    /// Point forecast `level + k*trend + seasonal[phase]`.
    pub fn point_forecast(&self, horizon: usize) -> Vec<f64> {
        let s = self.period();
        (1..=horizon)
            .map(|k| self.level + k as f64 * self.trend + self.seasonal[(self.n_obs + k - 1) % s])
            .collect()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs the recursions and returns the final state with the sum of squared errors.
fn run(history: &[f64], period: usize, p: EtsParams) -> (EtsState, f64) {
    let m1 = mean(&history[..period]);
    let m2 = mean(&history[period..2 * period]);
    let mut level = m1;
    let mut trend = if p.beta > 0.0 { (m2 - m1) / period as f64 } else { 0.0 };
    let mut seasonal: Vec<f64> = if p.gamma > 0.0 {
        history[..period].iter().map(|y| y - m1).collect()
    } else {
        vec![0.0; period]
    };
    let mut residuals = Vec::with_capacity(history.len() - period);
    let mut sse = 0.0;
    for (t, &y) in history.iter().enumerate() {
        let ph = t % period;
        let e = y - (level + trend + seasonal[ph]);
        if t >= period {
            residuals.push(e);
            sse += e * e;
        }
        let prev = level;
        level = p.alpha * (y - seasonal[ph]) + (1.0 - p.alpha) * (level + trend);
        if p.beta > 0.0 {
            trend = p.beta * (level - prev) + (1.0 - p.beta) * trend;
        }
        if p.gamma > 0.0 {
            seasonal[ph] = p.gamma * (y - level) + (1.0 - p.gamma) * seasonal[ph];
        }
    }
    // Re-centre so the seasonal components sum to zero.
    let shift = mean(&seasonal);
    seasonal.iter_mut().for_each(|s| *s -= shift);
    level += shift;
    (
        EtsState {
            level,
            trend,
            seasonal,
            params: p,
            n_obs: history.len(),
            residuals,
        },
        sse,
    )
}

/// Fits additive Holt-Winters; without fixed weights a 0.1-step grid search
/// minimises the in-sample squared one-step error.
pub fn ets_fit(history: &[f64], period: usize, params: Option<EtsParams>) -> Result<EtsState> {
    if period == 0 {
        return Err(Error::Config("seasonal period must be >= 1".into()));
    }
    if history.len() < 2 * period {
        return Err(Error::Config(format!(
            "ETS needs at least {} values, history has {}",
            2 * period,
            history.len()
        )));
    }
    if history.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("ETS history contains non-finite values".into()));
    }
    if let Some(p) = params {
        p.validate()?;
        return Ok(run(history, period, p).0);
    }
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let mut best: Option<(EtsState, f64)> = None;
    for &alpha in &grid {
        for &beta in &grid {
            for &gamma in &grid {
                let (st, sse) = run(history, period, EtsParams { alpha, beta, gamma });
                if best.as_ref().map_or(true, |(_, b)| sse < *b) {
                    best = Some((st, sse));
                }
            }
        }
    }
    Ok(best.expect("non-empty grid").0)
}

/// Point path with bootstrapped one-step residuals.
pub fn ets_forecast(
    unit_id: &str,
    state: &EtsState,
    horizon: usize,
    n_samples: usize,
    seed: u64,
    tau_grid: &[f64],
) -> Result<ForecastDistribution> {
    if horizon == 0 {
        return Err(Error::Config("forecast horizon must be positive".into()));
    }
    let point = state.point_forecast(horizon);
    super::bootstrap_distribution(unit_id, &point, &state.residuals, n_samples, seed, tau_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::seasonal_naive;
    use crate::probnet::DEFAULT_TAU_GRID;

    #[test]
    fn constant_series_is_fixed_point() {
        let st = ets_fit(&[4.0; 30], 5, None).unwrap();
        assert!(st.point_forecast(7).iter().all(|&v| (v - 4.0).abs() < 1e-12));
        assert!(st.residuals.iter().all(|&e| e.abs() < 1e-12));
        assert!(st.trend == 0.0 && st.seasonal.iter().all(|&s| s.abs() < 1e-12));
    }

    #[test]
    fn period_two_seasonal_has_zero_error() {
        let h: Vec<f64> = (0..20).map(|t| if t % 2 == 0 { 3.0 } else { 7.0 }).collect();
        let p = EtsParams {
            alpha: 0.3,
            beta: 0.0,
            gamma: 1.0,
        };
        let st = ets_fit(&h, 2, Some(p)).unwrap();
        assert!(st.residuals.iter().all(|e| e.abs() < 1e-12));
        assert_eq!(st.point_forecast(2), vec![3.0, 7.0]);
    }

    #[test]
    fn naive_reduction() {
        let h = [1.0, 5.0, 2.0, 8.0, 3.0, 9.5];
        let p = EtsParams {
            alpha: 1.0,
            beta: 0.0,
            gamma: 0.0,
        };
        let st = ets_fit(&h, 3, Some(p)).unwrap();
        assert_eq!(st.point_forecast(4), vec![9.5; 4]);
    }

    #[test]
    fn gamma_only_matches_seasonal_naive() {
        let h: Vec<f64> = (0..48).map(|t| ((t % 6) as f64).powi(2) + 10.0).collect();
        let p = EtsParams {
            alpha: 0.0,
            beta: 0.0,
            gamma: 1.0,
        };
        let st = ets_fit(&h, 6, Some(p)).unwrap();
        let f = st.point_forecast(12);
        let n = seasonal_naive(&h, 6, 12).unwrap();
        for (a, b) in f.iter().zip(&n) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn forecast_distribution() {
        let h: Vec<f64> = (0..60).map(|t| (t as f64 * 0.7).sin() * 3.0 + t as f64 * 0.1).collect();
        let st = ets_fit(&h, 6, None).unwrap();
        let a = ets_forecast("u", &st, 10, 100, 3, &DEFAULT_TAU_GRID).unwrap();
        let b = ets_forecast("u", &st, 10, 100, 3, &DEFAULT_TAU_GRID).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.monotonicity_violations(), 0);
        assert_eq!(a.quantile_fan.len(), DEFAULT_TAU_GRID.len());

        let flat = ets_fit(&[2.0; 12], 3, None).unwrap();
        let d = ets_forecast("u", &flat, 4, 10, 0, &DEFAULT_TAU_GRID).unwrap();
        assert!(d.quantile_fan.iter().flatten().all(|&q| (q - 2.0).abs() < 1e-12));
    }

    #[test]
    fn seasonal_sums_to_zero_and_errors() {
        let h: Vec<f64> = (0..40).map(|t| (t % 4) as f64 * 2.0 + t as f64).collect();
        let st = ets_fit(&h, 4, None).unwrap();
        assert!(st.seasonal.iter().sum::<f64>().abs() < 1e-9);
        assert!(ets_fit(&h[..7], 4, None).is_err());
        let bad = EtsParams {
            alpha: 1.5,
            beta: 0.0,
            gamma: 0.0,
        };
        assert!(ets_fit(&h, 4, Some(bad)).is_err());
    }
}
