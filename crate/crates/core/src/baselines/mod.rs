//! Reference forecasters for control-unit error baselines.

pub mod ets;
pub mod ffnn;
pub mod naive;

pub use ets::{ets_fit, ets_forecast, EtsParams, EtsState};
pub use ffnn::{ffnn_forecast, ffnn_train, FfnnConfig, FfnnParams};
pub use naive::{seasonal_naive, seasonal_naive_forecast};

use rand::Rng;

use crate::error::Result;
use crate::probnet::forecast::path_rng;
use crate::probnet::ForecastDistribution;

/// Point path plus i.i.d. residuals resampled with replacement.
///
/// Without residuals every path equals the point path.
pub(crate) fn bootstrap_distribution(
    unit_id: &str,
    point: &[f64],
    residuals: &[f64],
    n_samples: usize,
    seed: u64,
    tau_grid: &[f64],
) -> Result<ForecastDistribution> {
    let n = n_samples.max(2);
    let paths = (0..n)
        .map(|p| {
            if residuals.is_empty() {
                return point.to_vec();
            }
            let mut rng = path_rng(seed, p as u64);
            point
                .iter()
                .map(|&v| v + residuals[rng.random_range(0..residuals.len())])
                .collect()
        })
        .collect();
    ForecastDistribution::from_samples(unit_id, paths, tau_grid, seed)
}
