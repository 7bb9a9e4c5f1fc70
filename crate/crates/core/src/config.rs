//! Run configuration: one TOML file shared by every command, with
//! `section.key=value` overrides from the command line.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::causal::{Aggregation, EffectConfig, ModelKind, ModelSpec, TestSample};
use crate::error::{Error, Result};
use crate::metrics::{equispaced_grid, MetricConfig};
use crate::panel::{load_panel, GapPolicy, Panel, SchemaConfig};
use crate::probnet::{HeadType, TrainConfig, DEFAULT_TAU_GRID};
use crate::stats::TestMode;
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub path: String,
    /// Timestamp of the last pre-intervention observation.
    pub t0: String,
    pub treated: Vec<String>,
    pub control: Vec<String>,
    pub step: Option<String>,
    pub gap_policy: GapPolicy,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            path: "panel.csv".into(),
            t0: String::new(),
            treated: Vec::new(),
            control: Vec::new(),
            step: None,
            gap_policy: GapPolicy::Fail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub context_len: usize,
    pub horizon: usize,
    pub stride: usize,
    pub hidden: usize,
    pub layers: usize,
    pub head: HeadType,
    pub calendar: bool,
    pub ffnn_hidden: usize,
    /// Seasonal period of the seasonal-naive and ETS baselines.
    pub period: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            kind: ModelKind::Probnet,
            context_len: t.context_len,
            horizon: t.horizon,
            stride: t.stride,
            hidden: t.hidden,
            layers: t.layers,
            head: t.head_type,
            calendar: t.calendar,
            ffnn_hidden: 40,
            period: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
    pub clip: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            lr: t.learning_rate,
            batch: t.batch_size,
            seed: t.rng_seed,
            clip: t.gradient_clip_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastSection {
    pub n_samples: usize,
    pub tau_grid: Vec<f64>,
}

impl Default for ForecastSection {
    fn default() -> Self {
        Self {
            n_samples: 500,
            tau_grid: DEFAULT_TAU_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub alpha: f64,
    pub seasonality: usize,
    /// Number of equispaced CRPS quantile levels.
    pub crps_levels: usize,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            seasonality: 24,
            crps_levels: 99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestSection {
    pub mode: TestMode,
    pub sample: TestSample,
    pub aggregation: Aggregation,
    pub alpha: f64,
}

impl Default for TestSection {
    fn default() -> Self {
        Self {
            mode: TestMode::Auto,
            sample: TestSample::MedianEffect,
            aggregation: Aggregation::Pooled,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub forecast: ForecastSection,
    pub metrics: MetricsSection,
    pub test: TestSection,
    pub synth: SynthConfig,
}

/// Parses `raw` as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        cur = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{part}` in `{key}` is not a section")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        self.metric_config().validate()?;
        crate::probnet::forecast::validate_tau_grid(&self.forecast.tau_grid)?;
        if self.forecast.n_samples < 2 {
            return Err(Error::Config("forecast.n_samples must be >= 2".into()));
        }
        if self.model.period == 0 || self.model.ffnn_hidden == 0 {
            return Err(Error::Config("model.period and model.ffnn_hidden must be >= 1".into()));
        }
        if !(self.test.alpha > 0.0 && self.test.alpha < 1.0) {
            return Err(Error::Config("test.alpha must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch,
            learning_rate: self.train.lr,
            gradient_clip_norm: self.train.clip,
            rng_seed: self.train.seed,
            context_len: self.model.context_len,
            horizon: self.model.horizon,
            stride: self.model.stride,
            head_type: self.model.head,
            hidden: self.model.hidden,
            layers: self.model.layers,
            calendar: self.model.calendar,
        }
    }

    pub fn model_spec(&self, kind: ModelKind) -> ModelSpec {
        ModelSpec {
            kind,
            train: self.train_config(),
            period: self.model.period,
            ets_params: None,
            ffnn_hidden: self.model.ffnn_hidden,
            tau_grid: self.forecast.tau_grid.clone(),
        }
    }

    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            alpha: self.metrics.alpha,
            seasonality: self.metrics.seasonality,
            tau_grid: equispaced_grid(self.metrics.crps_levels),
        }
    }

    pub fn effect_config(&self) -> EffectConfig {
        EffectConfig {
            tau_grid: self.forecast.tau_grid.clone(),
            aggregation: self.test.aggregation,
            test_sample: self.test.sample,
            test_mode: self.test.mode,
            n_samples: self.forecast.n_samples,
            seed: self.train.seed,
            placebo_alpha: self.test.alpha,
        }
    }

    pub fn schema(&self) -> Result<SchemaConfig> {
        if self.data.t0.is_empty() {
            return Err(Error::Config("data.t0 is required".into()));
        }
        Ok(SchemaConfig {
            t0: self.data.t0.clone(),
            treated: self.data.treated.clone(),
            control: self.data.control.clone(),
            step: self.data.step.clone(),
            gap_policy: self.data.gap_policy,
        })
    }

    /// Loads the panel named by `data.path` unless another path is given.
    pub fn load_panel(&self, path: Option<&Path>) -> Result<Panel> {
        let p = path.map(Path::to_path_buf).unwrap_or_else(|| self.data.path.clone().into());
        load_panel(p, &self.schema()?)
    }

    /// Canonical TOML of the effective configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::to_toml`].
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[data]
path = "p.csv"
t0 = "2020-01-02T00:00:00+00:00"
treated = ["a"]
control = ["b"]

[train]
epochs = 3
"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::from_toml(SAMPLE, &[]).unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.lr, 1e-3);
        assert_eq!(c.forecast.n_samples, 500);
        assert_eq!(c.model.kind, ModelKind::Probnet);
        assert_eq!(c.schema().unwrap().treated, vec!["a".to_string()]);
    }

    #[test]
    fn overrides_win() {
        let o = vec![
            "train.epochs=7".to_string(),
            "model.kind=ets".to_string(),
            "forecast.tau_grid=[0.1, 0.5]".to_string(),
            "test.mode=\"exact\"".to_string(),
        ];
        let c = RunConfig::from_toml(SAMPLE, &o).unwrap();
        assert_eq!(c.train.epochs, 7);
        assert_eq!(c.model.kind, ModelKind::Ets);
        assert_eq!(c.forecast.tau_grid, vec![0.1, 0.5]);
        assert_eq!(c.test.mode, TestMode::Exact);
        assert_ne!(c.hash().unwrap(), RunConfig::from_toml(SAMPLE, &[]).unwrap().hash().unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::from_toml("[train]\nepochs = 0", &[]), Err(Error::Config(_))));
        assert!(RunConfig::from_toml("[train]\nunknown_key = 1", &[]).is_err());
        assert!(RunConfig::from_toml(SAMPLE, &["noequals".into()]).is_err());
        assert!(RunConfig::default().schema().is_err());
    }

    #[test]
    fn hash_is_stable() {
        let c = RunConfig::from_toml(SAMPLE, &[]).unwrap();
        let h = c.hash().unwrap();
        assert_eq!(h.len(), 16);
        assert_eq!(h, RunConfig::from_toml(SAMPLE, &[]).unwrap().hash().unwrap());
    }
}
