//! Versioned text serialisation of trained models.
//!
//! ```text
//! COUNTERFACT-MODEL
//! format 1
//! kind probnet
//! scaling mean_abs_plus_one
//! tau_grid 0.01 0.05 ...
//! loss_curve 0.97 0.41 ...
//! config 13
//! <TrainConfig as TOML, 13 lines>
//! tensor lstm0.w_input 100 1
//! <100 values>
//! ...
//! end
//! ```
//!
//! Floats use the shortest representation that parses back to the same bits,
//! so `load(save(m)) == m` exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::forecast::{forecast_samples, validate_tau_grid, History};
use super::network::NetworkParams;
use super::train::TrainConfig;
use super::ForecastDistribution;
use crate::baselines::{
    ets_fit, ets_forecast, ffnn_forecast, seasonal_naive_forecast, EtsParams, FfnnConfig, FfnnParams,
};
use crate::error::{Error, Result};

pub const MAGIC: &str = "COUNTERFACT-MODEL";
pub const FORMAT_VERSION: u32 = 1;
/// The only scaling rule implemented: divide by `1 + mean |context|`.
pub const SCALING: &str = "mean_abs_plus_one";

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Probnet(NetworkParams),
    Ffnn(FfnnParams),
    /// Holt-Winters is refitted per series at forecast time; `None` grid-searches.
    Ets { period: usize, params: Option<EtsParams> },
    SeasonalNaive { period: usize },
}

impl TrainedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Probnet(_) => "probnet",
            TrainedModel::Ffnn(_) => "ffnn",
            TrainedModel::Ets { .. } => "ets",
            TrainedModel::SeasonalNaive { .. } => "seasonal_naive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub model: TrainedModel,
    pub train: TrainConfig,
    pub tau_grid: Vec<f64>,
    /// Mean training NLL per epoch (empty for the local baselines).
    pub loss_curve: Vec<f64>,
}

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v:?}").expect("write to string");
    }
    s
}

struct Lines<'a>(std::str::Lines<'a>);

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str> {
        self.0
            .next()
            .ok_or_else(|| bad(format!("truncated artifact: missing {what}")))
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Artifact(msg.into())
}

fn parse_floats(text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad number `{t}`"))))
        .collect()
}

impl ModelArtifact {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut s = String::new();
        let config = toml::to_string(&self.train).map_err(|e| bad(e.to_string()))?;
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "format {FORMAT_VERSION}").unwrap();
        writeln!(s, "kind {}", self.model.kind()).unwrap();
        writeln!(s, "scaling {SCALING}").unwrap();
        writeln!(s, "tau_grid {}", join(&self.tau_grid)).unwrap();
        writeln!(s, "loss_curve {}", join(&self.loss_curve)).unwrap();
        writeln!(s, "config {}", config.lines().count()).unwrap();
        s.push_str(&config);
        if !config.ends_with('\n') {
            s.push('\n');
        }
        let tensors = |s: &mut String, shapes: Vec<(String, usize, usize)>, data: &[f64]| {
            let mut off = 0;
            for (name, r, c) in shapes {
                writeln!(s, "tensor {name} {r} {c}").unwrap();
                writeln!(s, "{}", join(&data[off..off + r * c])).unwrap();
                off += r * c;
            }
        };
        match &self.model {
            TrainedModel::Probnet(p) => tensors(&mut s, p.config().param_shapes(), p.as_slice()),
            TrainedModel::Ffnn(p) => {
                writeln!(s, "ffnn_hidden {}", p.config().hidden).unwrap();
                tensors(&mut s, p.config().param_shapes(), p.as_slice());
            }
            TrainedModel::Ets { period, params } => {
                writeln!(s, "period {period}").unwrap();
                match params {
                    Some(p) => writeln!(s, "ets_params {}", join(&[p.alpha, p.beta, p.gamma])).unwrap(),
                    None => writeln!(s, "ets_params auto").unwrap(),
                }
            }
            TrainedModel::SeasonalNaive { period } => writeln!(s, "period {period}").unwrap(),
        }
        s.push_str("end\n");
        Ok(s.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|_| bad("artifact is not UTF-8"))?;
        let mut lines = Lines(text.lines());
        if lines.next("magic")? != MAGIC {
            return Err(bad("bad magic line; not a model artifact"));
        }
        let field = |line: &str, key: &str| -> Result<String> {
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' ').or(if r.is_empty() { Some("") } else { None }))
                .map(str::to_string)
                .ok_or_else(|| bad(format!("expected `{key}`, found `{line}`")))
        };
        let version: u32 = field(lines.next("format")?, "format")?
            .parse()
            .map_err(|_| bad("bad format version"))?;
        if version != FORMAT_VERSION {
            return Err(bad(format!(
                "artifact format {version} is not supported (expected {FORMAT_VERSION})"
            )));
        }
        let kind = field(lines.next("kind")?, "kind")?;
        let scaling = field(lines.next("scaling")?, "scaling")?;
        if scaling != SCALING {
            return Err(bad(format!("unknown scaling mode `{scaling}`")));
        }
        let tau_grid = parse_floats(&field(lines.next("tau_grid")?, "tau_grid")?)?;
        validate_tau_grid(&tau_grid).map_err(|e| bad(e.to_string()))?;
        let loss_curve = parse_floats(&field(lines.next("loss_curve")?, "loss_curve")?)?;
        let n_cfg: usize = field(lines.next("config")?, "config")?
            .parse()
            .map_err(|_| bad("bad config line count"))?;
        let mut cfg_text = String::new();
        for _ in 0..n_cfg {
            cfg_text.push_str(lines.next("config body")?);
            cfg_text.push('\n');
        }
        let train: TrainConfig = toml::from_str(&cfg_text).map_err(|e| bad(format!("config: {e}")))?;

        let read_tensors = |lines: &mut Lines<'_>, shapes: Vec<(String, usize, usize)>| -> Result<Vec<f64>> {
            let mut data = Vec::new();
            for (name, r, c) in shapes {
                let head = format!("tensor {name} {r} {c}");
                let line = lines.next("tensor header")?;
                if line != head {
                    return Err(bad(format!("expected `{head}`, found `{line}`")));
                }
                let vals = parse_floats(lines.next("tensor values")?)?;
                if vals.len() != r * c {
                    return Err(bad(format!("tensor {name}: {} values for shape {r}x{c}", vals.len())));
                }
                data.extend(vals);
            }
            Ok(data)
        };
        let model = match kind.as_str() {
            "probnet" => {
                let cfg = train.net_config();
                let data = read_tensors(&mut lines, cfg.param_shapes())?;
                TrainedModel::Probnet(NetworkParams::from_flat(cfg, data).map_err(|e| bad(e.to_string()))?)
            }
            "ffnn" => {
                let hidden: usize = field(lines.next("ffnn_hidden")?, "ffnn_hidden")?
                    .parse()
                    .map_err(|_| bad("bad ffnn_hidden"))?;
                let cfg = FfnnConfig {
                    hidden,
                    head: train.head_type,
                    ..FfnnConfig::new(train.context_len, train.horizon)
                };
                let data = read_tensors(&mut lines, cfg.param_shapes())?;
                TrainedModel::Ffnn(FfnnParams::from_flat(cfg, data).map_err(|e| bad(e.to_string()))?)
            }
            "ets" | "seasonal_naive" => {
                let period: usize = field(lines.next("period")?, "period")?
                    .parse()
                    .map_err(|_| bad("bad period"))?;
                if kind == "seasonal_naive" {
                    TrainedModel::SeasonalNaive { period }
                } else {
                    let p = field(lines.next("ets_params")?, "ets_params")?;
                    let params = if p == "auto" {
                        None
                    } else {
                        match parse_floats(&p)?.as_slice() {
                            &[alpha, beta, gamma] => Some(EtsParams { alpha, beta, gamma }),
                            _ => return Err(bad("ets_params needs three values")),
                        }
                    };
                    TrainedModel::Ets { period, params }
                }
            }
            other => return Err(bad(format!("unknown model kind `{other}`"))),
        };
        if lines.next("end marker")? != "end" {
            return Err(bad("missing end marker"));
        }
        Ok(Self {
            model,
            train,
            tau_grid,
            loss_curve,
        })
    }

    /// Counterfactual forecast of one series from its history.
    pub fn forecast(
        &self,
        unit_id: &str,
        history: &History<'_>,
        horizon: usize,
        n_samples: usize,
        seed: u64,
    ) -> Result<ForecastDistribution> {
        let grid = &self.tau_grid;
        match &self.model {
            TrainedModel::Probnet(p) => forecast_samples(
                p,
                unit_id,
                history,
                self.train.context_len,
                horizon,
                n_samples,
                seed,
                grid,
            ),
            TrainedModel::Ffnn(p) => ffnn_forecast(p, unit_id, history.values, horizon, n_samples, seed, grid),
            TrainedModel::Ets { period, params } => {
                let st = ets_fit(history.values, *period, *params)?;
                ets_forecast(unit_id, &st, horizon, n_samples, seed, grid)
            }
            TrainedModel::SeasonalNaive { period } => {
                seasonal_naive_forecast(unit_id, history.values, *period, horizon, n_samples, seed, grid)
            }
        }
    }
}

pub fn save_model(model: &ModelArtifact, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelArtifact::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probnet::DEFAULT_TAU_GRID;

    fn small() -> ModelArtifact {
        let train = TrainConfig {
            hidden: 3,
            layers: 2,
            context_len: 4,
            horizon: 2,
            ..Default::default()
        };
        ModelArtifact {
            model: TrainedModel::Probnet(NetworkParams::init(train.net_config(), 9)),
            train,
            tau_grid: DEFAULT_TAU_GRID.to_vec(),
            loss_curve: vec![1.25, 0.1 + 0.2, -3e-9],
        }
    }

    #[test]
    fn roundtrip_is_exact() {
        let a = small();
        let bytes = a.to_bytes().unwrap();
        let b = ModelArtifact::from_bytes(&bytes).unwrap();
        assert_eq!(a, b);
        assert_eq!(bytes, b.to_bytes().unwrap());

        let train = TrainConfig {
            context_len: 3,
            horizon: 2,
            ..Default::default()
        };
        let ff = ModelArtifact {
            model: TrainedModel::Ffnn(FfnnParams::init(FfnnConfig::new(3, 2), 1)),
            train: train.clone(),
            tau_grid: vec![0.5],
            loss_curve: vec![],
        };
        assert_eq!(ModelArtifact::from_bytes(&ff.to_bytes().unwrap()).unwrap(), ff);
        for model in [
            TrainedModel::Ets {
                period: 24,
                params: Some(EtsParams {
                    alpha: 0.1,
                    beta: 0.0,
                    gamma: 0.3,
                }),
            },
            TrainedModel::Ets { period: 7, params: None },
            TrainedModel::SeasonalNaive { period: 48 },
        ] {
            let m = ModelArtifact {
                model,
                train: train.clone(),
                tau_grid: vec![0.1, 0.9],
                loss_curve: vec![],
            };
            assert_eq!(ModelArtifact::from_bytes(&m.to_bytes().unwrap()).unwrap(), m);
        }
    }

    #[test]
    fn metadata_is_recorded() {
        let text = String::from_utf8(small().to_bytes().unwrap()).unwrap();
        assert!(text.contains("scaling mean_abs_plus_one"));
        assert!(text.contains("tau_grid 0.01 0.05 0.1"));
    }

    #[test]
    fn corrupted_magic_and_version() {
        let bytes = small().to_bytes().unwrap();
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(ModelArtifact::from_bytes(&bad_magic), Err(Error::Artifact(_))));
        let text = String::from_utf8(bytes).unwrap().replace("format 1", "format 2");
        assert!(matches!(ModelArtifact::from_bytes(text.as_bytes()), Err(Error::Artifact(_))));
        let truncated = &small().to_bytes().unwrap()[..200];
        assert!(ModelArtifact::from_bytes(truncated).is_err());
    }
}
