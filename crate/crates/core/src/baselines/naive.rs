use crate::error::{Error, Result};
use crate::probnet::ForecastDistribution;

/// Repeats the last observed season: `f[k] = y[n - S + (k mod S)]`.
pub fn seasonal_naive(history: &[f64], period: usize, horizon: usize) -> Result<Vec<f64>> {
    if period == 0 {
        return Err(Error::Config("seasonal period must be >= 1".into()));
    }
    if history.len() < period {
        return Err(Error::Config(format!(
            "seasonal naive needs {period} values, history has {}",
            history.len()
        )));
    }
    let last = &history[history.len() - period..];
    Ok((0..horizon).map(|k| last[k % period]).collect())
}

/// Seasonal naive point path with bootstrapped in-sample seasonal differences.
pub fn seasonal_naive_forecast(
    unit_id: &str,
    history: &[f64],
    period: usize,
    horizon: usize,
    n_samples: usize,
    seed: u64,
    tau_grid: &[f64],
) -> Result<ForecastDistribution> {
    let point = seasonal_naive(history, period, horizon)?;
    let residuals: Vec<f64> = history.windows(period + 1).map(|w| w[period] - w[0]).collect();
    super::bootstrap_distribution(unit_id, &point, &residuals, n_samples, seed, tau_grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeats_last_season() {
        let h = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(seasonal_naive(&h, 3, 3).unwrap(), vec![4.0, 5.0, 6.0]);
        assert_eq!(seasonal_naive(&h, 3, 6).unwrap(), vec![4.0, 5.0, 6.0, 4.0, 5.0, 6.0]);
        assert_eq!(seasonal_naive(&[2.5; 4], 2, 5).unwrap(), vec![2.5; 5]);
    }

    #[test]
    fn idempotent_under_append() {
        let h: Vec<f64> = (0..10).map(|v| (v * v) as f64).collect();
        let f = seasonal_naive(&h, 4, 8).unwrap();
        let mut ext = h.clone();
        ext.extend(&f);
        assert_eq!(seasonal_naive(&ext, 4, 8).unwrap(), f);
    }

    #[test]
    fn errors() {
        assert!(matches!(seasonal_naive(&[1.0], 0, 1), Err(Error::Config(_))));
        assert!(matches!(seasonal_naive(&[1.0, 2.0], 3, 1), Err(Error::Config(_))));
    }
}
