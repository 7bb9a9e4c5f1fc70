//! Sequential (ancestral) sampling and quantile fans.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::network::{HeadType, NetworkParams, StepScratch};
use super::student_t::{sample_gaussian, sample_student_t, DistParams};
use crate::error::{Error, Result};
use crate::panel::compute_scale;

/// Default quantile levels reported in effect tables.
pub const DEFAULT_TAU_GRID: [f64; 13] = [
    0.01, 0.05, 0.1, 0.25, 0.3, 0.4, 0.5, 0.6, 0.75, 0.8, 0.9, 0.95, 0.99,
];

/// Monte-Carlo forecast of one unit: sample paths plus their quantile fan.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastDistribution {
    pub unit_id: String,
    pub horizon: usize,
    /// `n_samples x horizon`, original scale.
    pub sample_paths: Vec<Vec<f64>>,
    pub tau_grid: Vec<f64>,
    /// `Q x horizon`.
    pub quantile_fan: Vec<Vec<f64>>,
    pub rng_seed: u64,
}

impl ForecastDistribution {
    pub fn from_samples(
        unit_id: impl Into<String>,
        sample_paths: Vec<Vec<f64>>,
        tau_grid: &[f64],
        rng_seed: u64,
    ) -> Result<Self> {
        let horizon = sample_paths.first().map(Vec::len).unwrap_or(0);
        if sample_paths.iter().any(|p| p.len() != horizon) {
            return Err(Error::Shape("sample paths have unequal lengths".into()));
        }
        if sample_paths.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite value in sample paths".into()));
        }
        let quantile_fan = extract_quantiles(&sample_paths, tau_grid)?;
        Ok(Self {
            unit_id: unit_id.into(),
            horizon,
            sample_paths,
            tau_grid: tau_grid.to_vec(),
            quantile_fan,
            rng_seed,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.sample_paths.len()
    }

    /// Per-step quantile at an arbitrary level, computed from the samples.
    pub fn quantile_path(&self, tau: f64) -> Vec<f64> {
        let mut col = vec![0.0; self.n_samples()];
        (0..self.horizon)
            .map(|t| {
                for (c, p) in col.iter_mut().zip(&self.sample_paths) {
                    *c = p[t];
                }
                col.sort_by(f64::total_cmp);
                quantile_sorted(&col, tau)
            })
            .collect()
    }

    /// Column of the fan at `tau`, if `tau` is on the grid.
    pub fn fan_row(&self, tau: f64) -> Option<&[f64]> {
        self.tau_grid
            .iter()
            .position(|&t| (t - tau).abs() < 1e-12)
            .map(|i| self.quantile_fan[i].as_slice())
    }

    /// Quantiles of all samples pooled over every step.
    pub fn pooled_quantiles(&self, taus: &[f64]) -> Vec<f64> {
        let mut all: Vec<f64> = self.sample_paths.iter().flatten().copied().collect();
        all.sort_by(f64::total_cmp);
        taus.iter().map(|&t| quantile_sorted(&all, t)).collect()
    }

    /// Count of (step, adjacent tau) pairs where the fan decreases.
    pub fn monotonicity_violations(&self) -> usize {
        (0..self.horizon)
            .map(|t| {
                self.quantile_fan
                    .windows(2)
                    .filter(|w| w[1][t] < w[0][t])
                    .count()
            })
            .sum()
    }
}

/// Linear interpolation between order statistics at position `(n-1)*tau`.
pub fn quantile_sorted(sorted: &[f64], tau: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (n - 1) as f64 * tau.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = pos - lo as f64;
    let (a, b) = (sorted[lo], sorted[lo + 1]);
    (a + frac * (b - a)).clamp(a, b)
}

/// Empirical quantile of an unsorted sample.
pub fn quantile(values: &[f64], tau: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, tau)
}

pub fn validate_tau_grid(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(Error::Config("quantile grid is empty".into()));
    }
    if tau_grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::Config("quantile levels must lie in (0, 1)".into()));
    }
    if tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("quantile grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Per-step empirical quantiles of `samples` (`n x h`) giving a `Q x h` fan.
pub fn extract_quantiles(samples: &[Vec<f64>], tau_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    validate_tau_grid(tau_grid)?;
    if samples.len() < 2 {
        return Err(Error::Config("need at least two sample paths".into()));
    }
    let h = samples[0].len();
    let mut fan = vec![vec![0.0; h]; tau_grid.len()];
    let mut col = vec![0.0; samples.len()];
    for t in 0..h {
        for (c, p) in col.iter_mut().zip(samples) {
            *c = p[t];
        }
        col.sort_by(f64::total_cmp);
        for (q, &tau) in tau_grid.iter().enumerate() {
            fan[q][t] = quantile_sorted(&col, tau);
        }
    }
    Ok(fan)
}

/// Independent generator for one sample path: stream `path` of the keyed ChaCha cipher.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Stable 64-bit mix of a seed and a unit name.
pub fn unit_seed(seed: u64, unit_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in unit_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Draws from the network's predictive distribution for one step.
pub(crate) fn draw(head: HeadType, rng: &mut ChaCha8Rng, d: DistParams) -> f64 {
    match head {
        HeadType::StudentT => sample_student_t(rng, d),
        HeadType::Gaussian => sample_gaussian(rng, d.mu, d.sigma),
    }
}

/// Where a forecast starts: the conditioning history and its time stamps.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub values: &'a [f64],
    /// Epoch seconds of the last history value.
    pub end_time: i64,
    pub step_secs: i64,
    pub utc_offset_secs: i32,
}

impl<'a> History<'a> {
    pub fn untimed(values: &'a [f64]) -> Self {
        Self {
            values,
            end_time: 0,
            step_secs: 3600,
            utc_offset_secs: 0,
        }
    }
}

/// Warm-up result shared by all sample paths of one forecast.
struct Warm {
    state: super::lstm::HiddenState,
    first: DistParams,
    scale: f64,
    last_input: Vec<f64>,
}

fn warm_up(params: &NetworkParams, history: &History<'_>, context_len: usize) -> Result<Warm> {
    if history.values.len() < context_len || context_len == 0 {
        return Err(Error::Config(format!(
            "history of {} values is shorter than context length {context_len}",
            history.values.len()
        )));
    }
    let ctx = &history.values[history.values.len() - context_len..];
    let scale = compute_scale(ctx);
    let mut state = params.zero_state();
    let mut scratch = StepScratch::new(params.config());
    let mut x = vec![0.0; params.config().input_dim()];
    let mut dist = None;
    for (i, &v) in ctx.iter().enumerate() {
        // Input at position i predicts position i + 1.
        let target_time = history.end_time - (context_len as i64 - 2 - i as i64) * history.step_secs;
        params.fill_input(v / scale, target_time, history.utc_offset_secs, &mut x);
        dist = Some(params.step(&x, &mut state, &mut scratch));
    }
    Ok(Warm {
        state,
        first: dist.expect("non-empty context"),
        scale,
        last_input: x,
    })
}

/// Monte-Carlo forecast by feeding each sampled value back as the next input.
pub fn forecast_samples(
    params: &NetworkParams,
    unit_id: &str,
    history: &History<'_>,
    context_len: usize,
    horizon: usize,
    n_samples: usize,
    seed: u64,
    tau_grid: &[f64],
) -> Result<ForecastDistribution> {
    if horizon == 0 {
        return Err(Error::Config("forecast horizon must be positive".into()));
    }
    let warm = warm_up(params, history, context_len)?;
    let head = params.config().head;
    let paths: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(seed, path as u64);
            let mut state = warm.state.clone();
            let mut scratch = StepScratch::new(params.config());
            let mut x = warm.last_input.clone();
            let mut dist = warm.first;
            let mut out = Vec::with_capacity(horizon);
            for j in 1..=horizon {
                let y = draw(head, &mut rng, dist);
                out.push(y * warm.scale);
                if j < horizon {
                    let t = history.end_time + (j as i64 + 1) * history.step_secs;
                    params.fill_input(y, t, history.utc_offset_secs, &mut x);
                    dist = params.step(&x, &mut state, &mut scratch);
                }
            }
            out
        })
        .collect();
    ForecastDistribution::from_samples(unit_id, paths, tau_grid, seed)
}

/// Deterministic path obtained by feeding the predicted location back.
pub fn forecast_mean_path(
    params: &NetworkParams,
    history: &History<'_>,
    context_len: usize,
    horizon: usize,
) -> Result<Vec<f64>> {
    let mut warm = warm_up(params, history, context_len)?;
    let mut scratch = StepScratch::new(params.config());
    let mut dist = warm.first;
    let mut out = Vec::with_capacity(horizon);
    for j in 1..=horizon {
        out.push(dist.mu * warm.scale);
        let t = history.end_time + (j as i64 + 1) * history.step_secs;
        params.fill_input(dist.mu, t, history.utc_offset_secs, &mut warm.last_input);
        dist = params.step(&warm.last_input, &mut warm.state, &mut scratch);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probnet::network::NetConfig;

    #[test]
    fn median_of_one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.5), 50.5);
        let samples: Vec<Vec<f64>> = v.iter().map(|&x| vec![x]).collect();
        let fan = extract_quantiles(&samples, &[0.5]).unwrap();
        assert_eq!(fan[0][0], 50.5);
    }

    #[test]
    fn constant_samples() {
        let samples = vec![vec![7.0, 7.0]; 10];
        let fan = extract_quantiles(&samples, &DEFAULT_TAU_GRID).unwrap();
        assert!(fan.iter().flatten().all(|&q| q == 7.0));
    }

    #[test]
    fn rejects_bad_grids() {
        let s = vec![vec![1.0], vec![2.0]];
        assert!(extract_quantiles(&s, &[0.5, 0.5]).is_err());
        assert!(extract_quantiles(&s, &[0.0, 0.5]).is_err());
        assert!(extract_quantiles(&s[..1], &[0.5]).is_err());
    }

    fn degenerate_params() -> NetworkParams {
        let mut p = NetworkParams::init(NetConfig::default(), 5);
        let (w, b) = p.head_mut();
        w[25..75].iter_mut().for_each(|v| *v = 0.0);
        b[1] = -60.0;
        b[2] = 60.0;
        p
    }

    #[test]
    fn tiny_sigma_collapses_to_mean_path() {
        let p = degenerate_params();
        let hist: Vec<f64> = (0..30).map(|i| 10.0 + (i as f64 * 0.5).sin()).collect();
        let h = History::untimed(&hist);
        let fd = forecast_samples(&p, "u", &h, 24, 12, 20, 7, &DEFAULT_TAU_GRID).unwrap();
        let mean = forecast_mean_path(&p, &h, 24, 12).unwrap();
        for path in &fd.sample_paths {
            for (a, b) in path.iter().zip(&mean) {
                assert!((a - b).abs() < 1e-3, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn shapes_and_per_path_reproducibility() {
        let p = NetworkParams::init(NetConfig::default(), 11);
        let hist: Vec<f64> = (0..40).map(|i| 5.0 + (i % 6) as f64).collect();
        let h = History::untimed(&hist);
        let a = forecast_samples(&p, "u", &h, 12, 9, 16, 3, &DEFAULT_TAU_GRID).unwrap();
        assert_eq!(a.sample_paths.len(), 16);
        assert!(a.sample_paths.iter().all(|p| p.len() == 9));
        assert_eq!(a.quantile_fan.len(), DEFAULT_TAU_GRID.len());
        assert_eq!(a.monotonicity_violations(), 0);
        // A smaller run shares the leading paths exactly.
        let b = forecast_samples(&p, "u", &h, 12, 9, 4, 3, &DEFAULT_TAU_GRID).unwrap();
        assert_eq!(&a.sample_paths[..4], &b.sample_paths[..]);
        assert!(forecast_samples(&p, "u", &h, 12, 0, 4, 3, &DEFAULT_TAU_GRID).is_err());
        assert!(forecast_samples(&p, "u", &h, 50, 3, 4, 3, &DEFAULT_TAU_GRID).is_err());
    }
}
