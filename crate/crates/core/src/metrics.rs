//! Point and probabilistic forecast accuracy: WAPE, WRMSPE, MSIS and CRPS.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probnet::forecast::{quantile_sorted, validate_tau_grid};
use crate::probnet::ForecastDistribution;

/// `n` equispaced levels `1/(n+1), ..., n/(n+1)`.
pub fn equispaced_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Prediction interval level for MSIS; the interval is `[alpha/2, 1 - alpha/2]`.
    pub alpha: f64,
    /// Seasonal lag of the MSIS scale.
    pub seasonality: usize,
    /// Quantile levels used by CRPS.
    pub tau_grid: Vec<f64>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            seasonality: 24,
            tau_grid: equispaced_grid(99),
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config("metrics.alpha must lie in (0, 1)".into()));
        }
        if self.seasonality == 0 {
            return Err(Error::Config("metrics.seasonality must be >= 1".into()));
        }
        validate_tau_grid(&self.tau_grid)
    }
}

fn check_pair(actuals: &[f64], forecasts: &[f64]) -> Result<()> {
    if actuals.is_empty() || actuals.len() != forecasts.len() {
        return Err(Error::Metric(format!(
            "actuals ({}) and forecasts ({}) must be equal, non-empty lengths",
            actuals.len(),
            forecasts.len()
        )));
    }
    Ok(())
}

/// `sum |y - yhat| / sum y`.
pub fn wape(actuals: &[f64], forecasts: &[f64]) -> Result<f64> {
    check_pair(actuals, forecasts)?;
    let denom: f64 = actuals.iter().sum();
    if denom == 0.0 {
        return Err(Error::Metric("WAPE undefined: actuals sum to zero".into()));
    }
    let num: f64 = actuals.iter().zip(forecasts).map(|(y, f)| (y - f).abs()).sum();
    Ok(num / denom)
}

/// `sqrt(mean (y - yhat)^2) / mean y`.
pub fn wrmspe(actuals: &[f64], forecasts: &[f64]) -> Result<f64> {
    check_pair(actuals, forecasts)?;
    let n = actuals.len() as f64;
    let mean = actuals.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(Error::Metric("WRMSPE undefined: mean actual is zero".into()));
    }
    let mse = actuals.iter().zip(forecasts).map(|(y, f)| (y - f).powi(2)).sum::<f64>() / n;
    Ok(mse.sqrt() / mean)
}

/// Mean absolute seasonal difference of the in-sample series.
pub fn seasonal_mae(in_sample: &[f64], seasonality: usize) -> Result<f64> {
    if seasonality == 0 || in_sample.len() <= seasonality {
        return Err(Error::Metric(format!(
            "in-sample length {} must exceed seasonality {seasonality}",
            in_sample.len()
        )));
    }
    let diffs: f64 = in_sample
        .windows(seasonality + 1)
        .map(|w| (w[seasonality] - w[0]).abs())
        .sum();
    Ok(diffs / (in_sample.len() - seasonality) as f64)
}

/// Mean scaled interval score of a `[lower, upper]` band.
pub fn msis(actuals: &[f64], lower: &[f64], upper: &[f64], in_sample: &[f64], cfg: &MetricConfig) -> Result<f64> {
    check_pair(actuals, lower)?;
    check_pair(actuals, upper)?;
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Err(Error::Metric("interval lower bound exceeds upper bound".into()));
    }
    let scale = seasonal_mae(in_sample, cfg.seasonality)?;
    if scale == 0.0 {
        return Err(Error::Metric("MSIS undefined: in-sample seasonal differences are all zero".into()));
    }
    let k = 2.0 / cfg.alpha;
    let total: f64 = actuals
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&y, (&l, &u))| {
            let mut s = u - l;
            if y < l {
                s += k * (l - y);
            }
            if y > u {
                s += k * (y - u);
            }
            s
        })
        .sum();
    Ok(total / actuals.len() as f64 / scale)
}

/// Quantile-loss approximation of CRPS for one observation.
///
/// `fan[i]` is the forecast quantile at `tau_grid[i]`; the result is the mean
/// over the grid of twice the pinball loss `rho_tau(y - q_tau)`. The swapped
/// form `rho_tau(q_tau - y)` mirrors the fan and is not a proper score.
pub fn crps(actual: f64, fan: &[f64], tau_grid: &[f64]) -> Result<f64> {
    if fan.len() != tau_grid.len() || fan.is_empty() {
        return Err(Error::Metric("fan and quantile grid lengths differ".into()));
    }
    if fan.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Metric("quantile fan is not monotone".into()));
    }
    let total: f64 = fan
        .iter()
        .zip(tau_grid)
        .map(|(&q, &tau)| {
            let d = actual - q;
            2.0 * (tau * d).max((tau - 1.0) * d)
        })
        .sum();
    Ok(total / fan.len() as f64)
}

/// Mean CRPS over the horizon of a `Q x h` fan.
pub fn crps_mean(actuals: &[f64], fan: &[Vec<f64>], tau_grid: &[f64]) -> Result<f64> {
    if actuals.is_empty() || fan.len() != tau_grid.len() || fan.iter().any(|r| r.len() != actuals.len()) {
        return Err(Error::Metric("fan must be Q x h with h = number of actuals".into()));
    }
    let mut col = vec![0.0; fan.len()];
    let mut total = 0.0;
    for (t, &y) in actuals.iter().enumerate() {
        for (c, row) in col.iter_mut().zip(fan) {
            *c = row[t];
        }
        total += crps(y, &col, tau_grid)?;
    }
    Ok(total / actuals.len() as f64)
}

/// One row of a control-unit accuracy table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub unit_id: String,
    pub method: String,
    pub wape: f64,
    pub wrmspe: f64,
    pub msis: f64,
    pub crps: f64,
}

/// Scores a forecast distribution against the realised values.
///
/// The point forecast is the per-step median; the MSIS band and the CRPS fan
/// are read off the sample paths at the levels in `cfg`.
pub fn evaluate(
    method: &str,
    fd: &ForecastDistribution,
    actuals: &[f64],
    in_sample: &[f64],
    cfg: &MetricConfig,
) -> Result<MetricRow> {
    cfg.validate()?;
    if fd.horizon != actuals.len() {
        return Err(Error::Shape(format!(
            "forecast horizon {} vs {} actuals",
            fd.horizon,
            actuals.len()
        )));
    }
    let levels: Vec<f64> = cfg
        .tau_grid
        .iter()
        .copied()
        .chain([0.5, cfg.alpha / 2.0, 1.0 - cfg.alpha / 2.0])
        .collect();
    let q = levels.len();
    let mut fan = vec![vec![0.0; fd.horizon]; q];
    let mut col = vec![0.0; fd.n_samples()];
    for t in 0..fd.horizon {
        for (c, p) in col.iter_mut().zip(&fd.sample_paths) {
            *c = p[t];
        }
        col.sort_by(f64::total_cmp);
        for (row, &tau) in fan.iter_mut().zip(&levels) {
            row[t] = quantile_sorted(&col, tau);
        }
    }
    let upper = fan.pop().expect("upper");
    let lower = fan.pop().expect("lower");
    let median = fan.pop().expect("median");
    Ok(MetricRow {
        unit_id: fd.unit_id.clone(),
        method: method.to_string(),
        wape: wape(actuals, &median)?,
        wrmspe: wrmspe(actuals, &median)?,
        msis: msis(actuals, &lower, &upper, in_sample, cfg)?,
        crps: crps_mean(actuals, &fan, &cfg.tau_grid)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn point_metrics_by_hand() {
        let y = [10.0, 20.0, 30.0];
        let f = [12.0, 18.0, 33.0];
        assert_abs_diff_eq!(wape(&y, &f).unwrap(), 7.0 / 60.0, epsilon = 1e-12);
        assert_abs_diff_eq!(wrmspe(&y, &f).unwrap(), (17.0f64 / 3.0).sqrt() / 20.0, epsilon = 1e-12);
        assert_eq!(wape(&y, &y).unwrap(), 0.0);
        assert!(wape(&[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(wape(&y, &f[..2]).is_err());
    }

    #[test]
    fn msis_inside_and_penalty() {
        let cfg = MetricConfig {
            seasonality: 1,
            ..Default::default()
        };
        // in-sample steps of 5 give a seasonal MAE of 5.
        let ins = [0.0, 5.0, 10.0, 15.0];
        let v = msis(&[3.0, 4.0], &[0.0, 0.0], &[10.0, 10.0], &ins, &cfg).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
        // one step below the band by d = 1 adds 40 to that step.
        let v = msis(&[-1.0], &[0.0], &[0.0], &ins, &cfg).unwrap();
        assert_abs_diff_eq!(v, 40.0 / 5.0, epsilon = 1e-12);
        assert!(msis(&[1.0], &[2.0], &[1.0], &ins, &cfg).is_err());
        assert!(msis(&[1.0], &[1.0], &[1.0], &[1.0, 1.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn crps_point_mass_is_absolute_error() {
        let grid = equispaced_grid(99);
        let fan = vec![7.5; 99];
        assert_abs_diff_eq!(crps(10.0, &fan, &grid).unwrap(), 2.5, epsilon = 1e-12);
        assert!(crps(0.0, &[2.0, 1.0], &[0.25, 0.75]).is_err());
    }

    #[test]
    fn crps_uniform_fan() {
        let grid = equispaced_grid(9999);
        let v = crps(0.0, &grid, &grid).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-4);
    }

    #[test]
    fn crps_centre_is_best() {
        let grid = equispaced_grid(99);
        let fan: Vec<f64> = grid.iter().map(|t| t - 0.5).collect();
        let at = |y| crps(y, &fan, &grid).unwrap();
        assert!(at(0.0) < at(0.1) && at(0.0) < at(-0.1));
    }
}
