//! Command implementations behind the `counterfact` binary.
//!
//! Every CSV written here starts with a `# config_hash=<hex> seed=<n>` line
//! followed by a header row.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::causal::{analyze_units, backtest_controls, placebo_run, train_model, EffectReport, ModelKind, PlaceboSummary};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::metrics::MetricRow;
use crate::panel::{save_panel, Panel, Role};
use crate::probnet::forecast::{quantile, quantile_sorted};
use crate::probnet::{save_model, ModelArtifact};
use crate::synth::{generate_panel, oracle_quantile_effect};

/// CSV writer that prefixes the provenance comment line.
pub struct CsvOut {
    buf: Vec<u8>,
}

impl CsvOut {
    pub fn new(cfg: &RunConfig, header: &[&str]) -> Result<Self> {
        let mut buf = Vec::new();
        writeln!(buf, "# config_hash={} seed={}", cfg.hash()?, cfg.train.seed).expect("vec write");
        writeln!(buf, "{}", header.join(",")).expect("vec write");
        Ok(Self { buf })
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let line: Vec<String> = fields.into_iter().map(|f| f.as_ref().to_string()).collect();
        writeln!(self.buf, "{}", line.join(",")).expect("vec write");
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.buf
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, &self.buf).map_err(|e| Error::io(path, e))
    }
}

fn f(v: f64) -> String {
    format!("{v}")
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// `synth`: writes `panel.csv`, `config.toml` (pointing at the panel) and `truth.csv`.
pub fn cmd_synth(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    mkdir(out_dir)?;
    let s = &cfg.synth;
    let (panel, truth) = generate_panel(s)?;
    let panel_path = out_dir.join("panel.csv");
    save_panel(&panel, &panel_path)?;

    let mut run = cfg.clone();
    run.data.path = panel_path.to_string_lossy().into_owned();
    run.data.t0 = panel.format_timestamp(panel.t0() - 1);
    run.data.treated = panel.treated().map(|u| u.unit_id.clone()).collect();
    run.data.control = panel.controls().map(|u| u.unit_id.clone()).collect();
    run.data.step = Some(format!("{}s", panel.step_secs()));
    let cfg_path = out_dir.join("config.toml");
    fs::write(&cfg_path, run.to_toml()?).map_err(|e| Error::io(&cfg_path, e))?;

    let effects = oracle_quantile_effect(s, &truth, &cfg.forecast.tau_grid)?;
    let mut out = CsvOut::new(&run, &["unit_id", "tau", "true_effect", "true_pct_change", "counterfactual_quantile"])?;
    for e in &effects {
        let pct = e.pct_change();
        for (i, tau) in e.tau_grid.iter().enumerate() {
            out.row([e.unit_id.clone(), f(*tau), f(e.effect[i]), f(pct[i]), f(e.counterfactual[i])]);
        }
    }
    out.save(&out_dir.join("truth.csv"))
}

/// `train`: fits `model.kind` on pre-intervention data; writes the artifact and its loss curve.
pub fn cmd_train(cfg: &RunConfig, panel: &Panel, model_out: &Path) -> Result<ModelArtifact> {
    let model = train_model(panel, &cfg.model_spec(cfg.model.kind))?;
    if let Some(dir) = model_out.parent().filter(|d| !d.as_os_str().is_empty()) {
        mkdir(dir)?;
    }
    save_model(&model, model_out)?;
    let mut curve = CsvOut::new(cfg, &["epoch", "mean_nll"])?;
    for (i, v) in model.loss_curve.iter().enumerate() {
        curve.row([(i + 1).to_string(), f(*v)]);
    }
    curve.save(&loss_curve_path(model_out))?;
    Ok(model)
}

pub fn loss_curve_path(model_out: &Path) -> PathBuf {
    let mut name = model_out.file_name().unwrap_or_default().to_os_string();
    name.push(".loss.csv");
    model_out.with_file_name(name)
}

pub fn metric_table(cfg: &RunConfig, rows: &[MetricRow]) -> Result<CsvOut> {
    let mut out = CsvOut::new(cfg, &["unit_id", "method", "wape", "wrmspe", "msis", "crps"])?;
    for r in rows {
        out.row([r.unit_id.clone(), r.method.clone(), f(r.wape), f(r.wrmspe), f(r.msis), f(r.crps)]);
    }
    Ok(out)
}

/// `backtest`: control-unit accuracy of each method in `methods`. A supplied
/// artifact replaces the freshly trained model of its kind.
pub fn cmd_backtest(
    cfg: &RunConfig,
    panel: &Panel,
    methods: &[ModelKind],
    model: Option<&ModelArtifact>,
) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    for &kind in methods {
        let m = match model {
            Some(m) if m.model.kind() == kind.as_str() => m.clone(),
            _ => train_model(panel, &cfg.model_spec(kind))?,
        };
        rows.extend(backtest_controls(&m, panel, &cfg.metric_config(), &cfg.effect_config())?);
    }
    Ok(rows)
}

/// Effect table: one row per quantile and a summary row per unit.
pub fn report_table(cfg: &RunConfig, reports: &[EffectReport]) -> Result<CsvOut> {
    let mut out = CsvOut::new(
        cfg,
        &["unit_id", "tau", "avg_causal_effect", "pct_change", "p_signed_rank", "p_rank_sum"],
    )?;
    for r in reports {
        for (i, tau) in r.tau_grid.iter().enumerate() {
            out.row([r.unit_id.clone(), f(*tau), f(r.avg_causal_effect[i]), f(r.pct_change[i]), String::new(), String::new()]);
        }
        let mean_pct = r.pct_change.iter().sum::<f64>() / r.pct_change.len() as f64;
        out.row([
            r.unit_id.clone(),
            "overall".into(),
            f(r.overall_ate),
            f(mean_pct),
            f(r.p_signed_rank),
            r.p_rank_sum.map(f).unwrap_or_default(),
        ]);
    }
    Ok(out)
}

/// `effect`: writes `effects.csv`, `placebo.csv`, `fan.csv`, `series.csv` and
/// `distribution.csv` into `out_dir`.
pub fn cmd_effect(cfg: &RunConfig, panel: &Panel, model: &ModelArtifact, out_dir: &Path) -> Result<Vec<EffectReport>> {
    mkdir(out_dir)?;
    let analyses = analyze_units(model, panel, &cfg.effect_config())?;
    let (treated, controls): (Vec<_>, Vec<_>) = analyses.iter().partition(|a| a.report.role == Role::Treated);
    let reports: Vec<EffectReport> = treated.iter().map(|a| a.report.clone()).collect();
    let placebo: Vec<EffectReport> = controls.iter().map(|a| a.report.clone()).collect();
    report_table(cfg, &reports)?.save(&out_dir.join("effects.csv"))?;
    report_table(cfg, &placebo)?.save(&out_dir.join("placebo.csv"))?;

    let t0 = panel.t0();
    let mut fan = CsvOut::new(cfg, &["unit_id", "timestamp", "tau", "value"])?;
    let mut dist = CsvOut::new(cfg, &["unit_id", "role", "tau", "observed_pre", "observed_post", "counterfactual"])?;
    for a in &analyses {
        let fd = &a.forecast;
        for t in 0..fd.horizon {
            let ts = panel.format_timestamp(t0 + t);
            for (q, tau) in fd.tau_grid.iter().enumerate() {
                fan.row([fd.unit_id.clone(), ts.clone(), f(*tau), f(fd.quantile_fan[q][t])]);
            }
        }
        let unit = panel.unit(&fd.unit_id).expect("analysed unit exists");
        let r = &a.report;
        for (i, tau) in r.tau_grid.iter().enumerate() {
            dist.row([
                r.unit_id.clone(),
                role_name(r.role).into(),
                f(*tau),
                f(quantile(&unit.values[..t0], *tau)),
                f(r.observed_quantile[i]),
                f(r.counterfactual_quantile[i]),
            ]);
        }
    }
    fan.save(&out_dir.join("fan.csv"))?;
    dist.save(&out_dir.join("distribution.csv"))?;

    let mut series = CsvOut::new(cfg, &["unit_id", "role", "timestamp", "period", "value"])?;
    for u in panel.units() {
        for (t, v) in u.values.iter().enumerate() {
            let period = if t < t0 { "pre" } else { "post" };
            series.row([u.unit_id.clone(), role_name(u.role).into(), panel.format_timestamp(t), period.into(), f(*v)]);
        }
    }
    series.save(&out_dir.join("series.csv"))?;
    Ok(reports)
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::Treated => "treated",
        Role::Control => "control",
    }
}

/// `placebo`: control-unit reports plus a pass/fail summary.
pub fn cmd_placebo(cfg: &RunConfig, panel: &Panel, model: &ModelArtifact) -> Result<(PlaceboSummary, CsvOut)> {
    let summary = placebo_run(model, panel, &cfg.effect_config())?;
    let reports: Vec<EffectReport> = summary.reports.values().cloned().collect();
    Ok((summary, report_table(cfg, &reports)?))
}

/// Minimal reader for the CSVs written by this module.
fn read_table(path: &Path) -> Result<Vec<BTreeMap<String, String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Config(format!("{}: {other:?}", path.display())),
        })?;
    let headers = rdr.headers()?.clone();
    rdr.records()
        .map(|r| {
            let r = r?;
            Ok(headers.iter().map(str::to_string).zip(r.iter().map(str::to_string)).collect())
        })
        .collect()
}

fn num(row: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    row.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Config(format!("missing numeric column `{key}`")))
}

/// `plotdata`: derives figure-ready CSVs from an `effect` output directory.
///
/// * `fan_plot.csv`: per step, observed value and the counterfactual fan in wide form.
/// * `quantile_distribution.csv`: pre, post and counterfactual quantile curves.
/// * `boxplot.csv`: five-number summaries of the pre, post and counterfactual-median series.
pub fn cmd_plotdata(cfg: &RunConfig, report_dir: &Path, out_dir: &Path) -> Result<()> {
    mkdir(out_dir)?;
    let fan = read_table(&report_dir.join("fan.csv"))?;
    let series = read_table(&report_dir.join("series.csv"))?;
    let dist = read_table(&report_dir.join("distribution.csv"))?;

    let mut observed: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut pre: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut post: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &series {
        let (u, v) = (r["unit_id"].clone(), num(r, "value")?);
        observed.insert((u.clone(), r["timestamp"].clone()), v);
        if r["period"] == "pre" { pre.entry(u).or_default().push(v) } else { post.entry(u).or_default().push(v) }
    }

    let mut taus: Vec<String> = Vec::new();
    let mut wide: BTreeMap<(String, String), BTreeMap<String, String>> = BTreeMap::new();
    let mut median: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &fan {
        let tau = r["tau"].clone();
        if !taus.contains(&tau) {
            taus.push(tau.clone());
        }
        if num(r, "tau")? == 0.5 {
            median.entry(r["unit_id"].clone()).or_default().push(num(r, "value")?);
        }
        wide.entry((r["unit_id"].clone(), r["timestamp"].clone()))
            .or_default()
            .insert(tau, r["value"].clone());
    }
    let mut header = vec!["unit_id".to_string(), "timestamp".into(), "observed".into()];
    header.extend(taus.iter().map(|t| format!("q{t}")));
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = CsvOut::new(cfg, &hdr)?;
    for ((u, ts), qs) in &wide {
        let mut row = vec![u.clone(), ts.clone(), observed.get(&(u.clone(), ts.clone())).map(|v| f(*v)).unwrap_or_default()];
        row.extend(taus.iter().map(|t| qs.get(t).cloned().unwrap_or_default()));
        out.row(row);
    }
    out.save(&out_dir.join("fan_plot.csv"))?;

    let mut qd = CsvOut::new(cfg, &["unit_id", "role", "tau", "observed_pre", "observed_post", "counterfactual"])?;
    for r in &dist {
        qd.row([&r["unit_id"], &r["role"], &r["tau"], &r["observed_pre"], &r["observed_post"], &r["counterfactual"]]);
    }
    qd.save(&out_dir.join("quantile_distribution.csv"))?;

    let mut bx = CsvOut::new(cfg, &["unit_id", "series", "min", "q1", "median", "q3", "max"])?;
    let mut five = |u: &str, name: &str, v: &[f64]| {
        if v.is_empty() {
            return;
        }
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        let q = |t| f(quantile_sorted(&s, t));
        bx.row([u.to_string(), name.to_string(), q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)]);
    };
    for (u, v) in &pre {
        five(u, "observed_pre", v);
        if let Some(p) = post.get(u) {
            five(u, "observed_post", p);
        }
        if let Some(m) = median.get(u) {
            five(u, "counterfactual_median", m);
        }
    }
    bx.save(&out_dir.join("boxplot.csv"))
}

/// Saves `out` at `path`, or prints it to stdout.
pub fn write_or_print(out: &CsvOut, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => out.save(p),
        None => {
            std::io::stdout()
                .write_all(out.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}
