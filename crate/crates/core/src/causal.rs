//! Per-quantile counterfactual effects, ATEs, placebo runs and the
//! end-to-end analysis bundle.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::baselines::{ffnn_train, EtsParams};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricConfig, MetricRow};
use crate::panel::{make_training_windows, Panel, Role, UnitSeries};
use crate::probnet::forecast::{quantile, unit_seed, validate_tau_grid};
use crate::probnet::{
    train_network, ForecastDistribution, History, ModelArtifact, TrainConfig, TrainedModel, DEFAULT_TAU_GRID,
};
use crate::stats::{rank_sum, wilcoxon_signed_rank, TestMode};

/// How observed and counterfactual quantiles are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Quantiles of all post-period values pooled over time, on both sides.
    #[default]
    Pooled,
    /// Time average of `y_t - q_tau,t` against the per-step fan.
    PerTimestep,
}

/// Sample handed to the rank tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSample {
    /// Per-step median effect `y_t - median_t` (one value per post step).
    #[default]
    MedianEffect,
    /// The per-quantile ATEs (one value per quantile level).
    QuantileAte,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffectConfig {
    pub tau_grid: Vec<f64>,
    pub aggregation: Aggregation,
    pub test_sample: TestSample,
    pub test_mode: TestMode,
    pub n_samples: usize,
    pub seed: u64,
    /// Significance level of the placebo summary.
    pub placebo_alpha: f64,
}

impl Default for EffectConfig {
    fn default() -> Self {
        Self {
            tau_grid: DEFAULT_TAU_GRID.to_vec(),
            aggregation: Aggregation::Pooled,
            test_sample: TestSample::MedianEffect,
            test_mode: TestMode::Auto,
            n_samples: 500,
            seed: 0,
            placebo_alpha: 0.05,
        }
    }
}

/// Per-step effect paths `delta[q][t] = y_t - fan[q][t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileEffects {
    pub tau_grid: Vec<f64>,
    pub paths: Vec<Vec<f64>>,
    /// Pooled observed post-period quantiles.
    pub observed: Vec<f64>,
    /// Pooled counterfactual quantiles.
    pub counterfactual: Vec<f64>,
}

/// Effect of the intervention at every quantile of `counterfactual.tau_grid`.
pub fn per_quantile_effect(observed_post: &[f64], counterfactual: &ForecastDistribution) -> Result<QuantileEffects> {
    if observed_post.len() != counterfactual.horizon {
        return Err(Error::Shape(format!(
            "{} observed post-period values vs forecast horizon {}",
            observed_post.len(),
            counterfactual.horizon
        )));
    }
    let taus = &counterfactual.tau_grid;
    let paths = counterfactual
        .quantile_fan
        .iter()
        .map(|row| observed_post.iter().zip(row).map(|(y, q)| y - q).collect())
        .collect();
    Ok(QuantileEffects {
        tau_grid: taus.clone(),
        paths,
        observed: taus.iter().map(|&t| quantile(observed_post, t)).collect(),
        counterfactual: counterfactual.pooled_quantiles(taus),
    })
}

/// Time average of each effect path.
pub fn ate_per_quantile(paths: &[Vec<f64>]) -> Result<Vec<f64>> {
    paths
        .iter()
        .map(|p| {
            if p.is_empty() {
                Err(Error::Shape("empty post period".into()))
            } else {
                Ok(p.iter().sum::<f64>() / p.len() as f64)
            }
        })
        .collect()
}

/// Unweighted mean of the per-quantile ATEs.
pub fn overall_ate(ates: &[f64]) -> Result<f64> {
    if ates.is_empty() {
        return Err(Error::Shape("no quantile ATEs".into()));
    }
    Ok(ates.iter().sum::<f64>() / ates.len() as f64)
}

/// `100 * delta / q0`, relative to the counterfactual quantile.
pub fn pct_change(delta: f64, q0: f64) -> Result<f64> {
    if q0 == 0.0 {
        return Err(Error::Metric("percent change undefined: counterfactual quantile is zero".into()));
    }
    Ok(100.0 * delta / q0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectReport {
    pub unit_id: String,
    pub role: Role,
    pub tau_grid: Vec<f64>,
    pub avg_causal_effect: Vec<f64>,
    pub pct_change: Vec<f64>,
    pub observed_quantile: Vec<f64>,
    pub counterfactual_quantile: Vec<f64>,
    pub overall_ate: f64,
    pub p_signed_rank: f64,
    /// Treated units only: rank-sum test against the pooled control samples.
    pub p_rank_sum: Option<f64>,
    pub n_post: usize,
}

/// Report for one unit plus the sample that fed its signed-rank test.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitAnalysis {
    pub report: EffectReport,
    pub test_sample: Vec<f64>,
    pub forecast: ForecastDistribution,
}

/// Effects and signed-rank test for one unit given its counterfactual forecast.
pub fn unit_effect(
    unit: &UnitSeries,
    observed_post: &[f64],
    forecast: ForecastDistribution,
    cfg: &EffectConfig,
) -> Result<UnitAnalysis> {
    let eff = per_quantile_effect(observed_post, &forecast)?;
    let ates = match cfg.aggregation {
        Aggregation::Pooled => eff
            .observed
            .iter()
            .zip(&eff.counterfactual)
            .map(|(o, c)| o - c)
            .collect(),
        Aggregation::PerTimestep => ate_per_quantile(&eff.paths)?,
    };
    let pct = ates
        .iter()
        .zip(&eff.counterfactual)
        .map(|(&d, &q)| pct_change(d, q))
        .collect::<Result<Vec<_>>>()?;
    let test_sample = match cfg.test_sample {
        TestSample::MedianEffect => observed_post
            .iter()
            .zip(forecast.quantile_path(0.5))
            .map(|(y, m)| y - m)
            .collect(),
        TestSample::QuantileAte => ates.clone(),
    };
    let p_signed_rank = wilcoxon_signed_rank(&test_sample, cfg.test_mode)?.p_value;
    Ok(UnitAnalysis {
        report: EffectReport {
            unit_id: unit.unit_id.clone(),
            role: unit.role,
            tau_grid: eff.tau_grid,
            overall_ate: overall_ate(&ates)?,
            avg_causal_effect: ates,
            pct_change: pct,
            observed_quantile: eff.observed,
            counterfactual_quantile: eff.counterfactual,
            p_signed_rank,
            p_rank_sum: None,
            n_post: observed_post.len(),
        },
        test_sample,
        forecast,
    })
}

/// Pre-intervention history of a unit with its time stamps.
pub fn pre_history<'a>(panel: &'a Panel, unit: &'a UnitSeries) -> History<'a> {
    History {
        values: &unit.values[..panel.t0()],
        end_time: panel.timestamps()[panel.t0() - 1],
        step_secs: panel.step_secs(),
        utc_offset_secs: panel.utc_offset_secs(),
    }
}

/// Counterfactual forecast of the whole post period of one unit.
pub fn counterfactual(model: &ModelArtifact, panel: &Panel, unit: &UnitSeries, cfg: &EffectConfig) -> Result<ForecastDistribution> {
    let mut fd = model.forecast(
        &unit.unit_id,
        &pre_history(panel, unit),
        panel.horizon(),
        cfg.n_samples,
        unit_seed(cfg.seed, &unit.unit_id),
    )?;
    if fd.tau_grid != cfg.tau_grid {
        fd = ForecastDistribution::from_samples(fd.unit_id, fd.sample_paths, &cfg.tau_grid, fd.rng_seed)?;
    }
    Ok(fd)
}

/// Effect analysis of every unit; treated units get a rank-sum test against
/// the pooled control samples.
pub fn analyze_units(model: &ModelArtifact, panel: &Panel, cfg: &EffectConfig) -> Result<Vec<UnitAnalysis>> {
    validate_tau_grid(&cfg.tau_grid)?;
    if cfg.n_samples < 2 {
        return Err(Error::Config("forecast.n_samples must be >= 2".into()));
    }
    let mut out = Vec::new();
    for unit in panel.units() {
        let fd = counterfactual(model, panel, unit, cfg)?;
        out.push(unit_effect(unit, &unit.values[panel.t0()..], fd, cfg)?);
    }
    let control_sample: Vec<f64> = out
        .iter()
        .filter(|a| a.report.role == Role::Control)
        .flat_map(|a| a.test_sample.iter().copied())
        .collect();
    if control_sample.is_empty() {
        return Err(Error::Config("panel has no control units".into()));
    }
    for a in out.iter_mut().filter(|a| a.report.role == Role::Treated) {
        a.report.p_rank_sum = Some(rank_sum(&a.test_sample, &control_sample, cfg.test_mode)?.p_value);
    }
    Ok(out)
}

/// Treated-unit effect reports.
pub fn effect_reports(model: &ModelArtifact, panel: &Panel, cfg: &EffectConfig) -> Result<Vec<EffectReport>> {
    Ok(analyze_units(model, panel, cfg)?
        .into_iter()
        .filter(|a| a.report.role == Role::Treated)
        .map(|a| a.report)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaceboSummary {
    pub reports: BTreeMap<String, EffectReport>,
    /// Controls whose signed-rank test does not reject at `placebo_alpha`.
    pub null_controls: Vec<String>,
    /// Treated units whose rank-sum test against the controls rejects.
    pub separated_treated: Vec<String>,
    pub n_treated: usize,
    pub passed: bool,
}

/// Treats every control as if it were treated and checks for a null effect.
pub fn placebo_run(model: &ModelArtifact, panel: &Panel, cfg: &EffectConfig) -> Result<PlaceboSummary> {
    let all = analyze_units(model, panel, cfg)?;
    let alpha = cfg.placebo_alpha;
    let mut reports = BTreeMap::new();
    let mut null_controls = Vec::new();
    let mut separated_treated = Vec::new();
    let mut n_treated = 0;
    for a in all {
        let r = a.report;
        match r.role {
            Role::Control => {
                if r.p_signed_rank >= alpha {
                    null_controls.push(r.unit_id.clone());
                }
                reports.insert(r.unit_id.clone(), r);
            }
            Role::Treated => {
                n_treated += 1;
                if r.p_rank_sum.is_some_and(|p| p < alpha) {
                    separated_treated.push(r.unit_id);
                }
            }
        }
    }
    if reports.is_empty() {
        return Err(Error::Config("placebo run needs control units".into()));
    }
    let passed = null_controls.len() == reports.len() && separated_treated.len() == n_treated;
    Ok(PlaceboSummary {
        reports,
        null_controls,
        separated_treated,
        n_treated,
        passed,
    })
}

/// Forecasting method used for training and backtests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Probnet,
    Ffnn,
    Ets,
    SeasonalNaive,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::SeasonalNaive, ModelKind::Ets, ModelKind::Ffnn, ModelKind::Probnet];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Probnet => "probnet",
            ModelKind::Ffnn => "ffnn",
            ModelKind::Ets => "ets",
            ModelKind::SeasonalNaive => "seasonal_naive",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub train: TrainConfig,
    /// Seasonal period of the local baselines.
    pub period: usize,
    pub ets_params: Option<EtsParams>,
    pub ffnn_hidden: usize,
    pub tau_grid: Vec<f64>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, train: TrainConfig) -> Self {
        Self {
            kind,
            train,
            period: 24,
            ets_params: None,
            ffnn_hidden: 40,
            tau_grid: DEFAULT_TAU_GRID.to_vec(),
        }
    }
}

/// Fits a model on the pre-intervention part of the panel only.
pub fn train_model(panel: &Panel, spec: &ModelSpec) -> Result<ModelArtifact> {
    validate_tau_grid(&spec.tau_grid)?;
    let tc = &spec.train;
    let (model, loss_curve) = match spec.kind {
        ModelKind::Probnet | ModelKind::Ffnn => {
            tc.validate()?;
            let windows = make_training_windows(&panel.pre(), tc.horizon, tc.context_len, tc.stride)?;
            if spec.kind == ModelKind::Probnet {
                let (p, c) = train_network(&windows, tc)?;
                (TrainedModel::Probnet(p), c)
            } else {
                let (p, c) = ffnn_train(&windows, tc, spec.ffnn_hidden)?;
                (TrainedModel::Ffnn(p), c)
            }
        }
        ModelKind::Ets => (
            TrainedModel::Ets {
                period: spec.period,
                params: spec.ets_params,
            },
            Vec::new(),
        ),
        ModelKind::SeasonalNaive => (TrainedModel::SeasonalNaive { period: spec.period }, Vec::new()),
    };
    Ok(ModelArtifact {
        model,
        train: tc.clone(),
        tau_grid: spec.tau_grid.clone(),
        loss_curve,
    })
}

/// Scores a model's post-period forecasts of every control unit.
pub fn backtest_controls(
    model: &ModelArtifact,
    panel: &Panel,
    metrics: &MetricConfig,
    cfg: &EffectConfig,
) -> Result<Vec<MetricRow>> {
    panel
        .controls()
        .map(|unit| {
            let fd = counterfactual(model, panel, unit, cfg)?;
            evaluate(
                model.model.kind(),
                &fd,
                &unit.values[panel.t0()..],
                &unit.values[..panel.t0()],
                metrics,
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisBundle {
    /// One row per control unit and method.
    pub metrics: Vec<MetricRow>,
    pub reports: Vec<EffectReport>,
    pub placebo: Vec<EffectReport>,
    pub model: ModelArtifact,
}

/// Control-unit backtest of every method, then counterfactual effects of the
/// treated units from the model of kind `primary`.
pub fn full_analysis(
    panel: &Panel,
    specs: &[ModelSpec],
    primary: ModelKind,
    metrics: &MetricConfig,
    cfg: &EffectConfig,
) -> Result<AnalysisBundle> {
    let mut rows = Vec::new();
    let mut chosen = None;
    for spec in specs {
        let model = train_model(panel, spec)?;
        rows.extend(backtest_controls(&model, panel, metrics, cfg)?);
        if spec.kind == primary {
            chosen = Some(model);
        }
    }
    let model = chosen.ok_or_else(|| Error::Config(format!("no model spec of kind {}", primary.as_str())))?;
    let (reports, placebo) = analyze_units(&model, panel, cfg)?
        .into_iter()
        .map(|a| a.report)
        .partition(|r| r.role == Role::Treated);
    Ok(AnalysisBundle {
        metrics: rows,
        reports,
        placebo,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fd_from(paths: Vec<Vec<f64>>, taus: &[f64]) -> ForecastDistribution {
        ForecastDistribution::from_samples("u", paths, taus, 0).unwrap()
    }

    #[test]
    fn null_effect_against_median_fan() {
        let paths: Vec<Vec<f64>> = (0..101).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let fd = fd_from(paths, &[0.5]);
        let obs = fd.fan_row(0.5).unwrap().to_vec();
        let e = per_quantile_effect(&obs, &fd).unwrap();
        assert!(e.paths[0].iter().all(|&d| d == 0.0));
        assert!(per_quantile_effect(&obs[..1], &fd).is_err());
    }

    #[test]
    fn subtraction_and_pct() {
        let fd = fd_from(vec![vec![100.0], vec![100.0]], &[0.5]);
        let e = per_quantile_effect(&[90.0], &fd).unwrap();
        assert_eq!(e.paths[0][0], -10.0);
        assert_eq!(pct_change(-10.0, 100.0).unwrap(), -10.0);
        assert_eq!(pct_change(0.0, 5.0).unwrap(), 0.0);
        assert!(pct_change(1.0, 0.0).is_err());
    }

    #[test]
    fn effect_table_back_solve() {
        let d = 19221.9 - 26128.7;
        assert_abs_diff_eq!(d, -6906.8, epsilon = 1e-6);
        assert_abs_diff_eq!(pct_change(-6906.85, 26128.7).unwrap(), -26.43, epsilon = 5e-3);
        let q0 = -12522.03 / -0.6584;
        assert_abs_diff_eq!(pct_change(-12522.03, q0).unwrap(), -65.84, epsilon = 1e-9);
        assert!((q0 - 19019.5).abs() < 1.0);
    }

    #[test]
    fn ate_aggregation() {
        assert_eq!(ate_per_quantile(&[vec![3.0; 5]]).unwrap(), vec![3.0]);
        assert_eq!(ate_per_quantile(&[vec![1.0, -1.0, 1.0, -1.0]]).unwrap(), vec![0.0]);
        let a = ate_per_quantile(&[vec![1.0, 4.0]]).unwrap()[0];
        let b = ate_per_quantile(&[vec![2.5, 10.0]]).unwrap()[0];
        assert_abs_diff_eq!(b, 2.5 * a, epsilon = 1e-12);
        assert!(ate_per_quantile(&[vec![]]).is_err());
        assert_eq!(overall_ate(&[-4.0, -6.0]).unwrap(), -5.0);
        assert_eq!(overall_ate(&[2.0; 3]).unwrap(), 2.0);
        assert_eq!(overall_ate(&[-6.0, 1.0, -4.0]).unwrap(), overall_ate(&[1.0, -4.0, -6.0]).unwrap());
        assert!(overall_ate(&[]).is_err());
    }

    #[test]
    fn model_kind_names() {
        for k in ModelKind::ALL {
            assert_eq!(ModelKind::parse(k.as_str()).unwrap(), k);
        }
        assert!(ModelKind::parse("tbats").is_err());
    }
}
