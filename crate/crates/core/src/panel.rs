//! Multi-unit time-series panels.
//!
//! A [`Panel`] is an aligned matrix of unit series sharing one uniform time
//! grid, with each unit flagged as treated or control and an intervention
//! index `t0` (the number of pre-intervention observations). Everything the
//! forecaster trains on comes out of [`Panel::pre`], so post-intervention
//! values never reach the training windows.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, FixedOffset, SecondsFormat, TimeZone};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IngestError, Result};

/// Longest run of consecutive missing steps that linear gap filling repairs.
pub const MAX_FILL_GAP: usize = 3;

/// Number of calendar covariates (hour-of-day and day-of-week one-hot).
pub const CALENDAR_DIM: usize = 24 + 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Treated,
    Control,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitSeries {
    pub unit_id: String,
    pub role: Role,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    /// Any missing (timestamp, unit) cell is an error.
    #[default]
    Fail,
    /// Interior gaps of at most [`MAX_FILL_GAP`] steps are linearly interpolated.
    Linear,
}

/// Describes how a long-format CSV maps onto a panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    /// Timestamp of the last pre-intervention observation.
    pub t0: String,
    pub treated: Vec<String>,
    pub control: Vec<String>,
    /// Grid step such as `30m`, `1h` or `3600s`. Inferred from the data when absent.
    #[serde(default)]
    pub step: Option<String>,
    #[serde(default)]
    pub gap_policy: GapPolicy,
}

/// Aligned panel of unit series on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    units: Vec<UnitSeries>,
    /// Epoch seconds of every grid point.
    timestamps: Vec<i64>,
    step_secs: i64,
    /// UTC offset used when writing timestamps back out.
    utc_offset_secs: i32,
    /// Count of pre-intervention observations; index `t0 - 1` is the last one.
    t0: usize,
}

impl Panel {
    /// Builds a panel on the grid `start, start + step, ...`, checking every invariant.
    pub fn new(
        units: Vec<UnitSeries>,
        start_secs: i64,
        step_secs: i64,
        utc_offset_secs: i32,
        t0: usize,
    ) -> Result<Self> {
        if step_secs <= 0 {
            return Err(Error::Config(format!("step must be positive, got {step_secs}s")));
        }
        let len = units.first().map(|u| u.values.len()).unwrap_or(0);
        for u in &units {
            if u.values.len() != len {
                return Err(Error::Shape(format!(
                    "unit `{}` has {} values, expected {len}",
                    u.unit_id,
                    u.values.len()
                )));
            }
            if let Some(i) = u.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Ingest(IngestError::Malformed {
                    line: i,
                    reason: format!("non-finite value in unit `{}`", u.unit_id),
                }));
            }
        }
        if !units.iter().any(|u| u.role == Role::Treated) {
            return Err(Error::Config("panel needs at least one treated unit".into()));
        }
        if !units.iter().any(|u| u.role == Role::Control) {
            return Err(Error::Config("panel needs at least one control unit".into()));
        }
        if !(t0 > 1 && t0 < len) {
            return Err(Error::Config(format!(
                "intervention index must satisfy 1 < T0 < T, got T0={t0}, T={len}"
            )));
        }
        let timestamps = (0..len as i64).map(|i| start_secs + i * step_secs).collect();
        Ok(Self {
            units,
            timestamps,
            step_secs,
            utc_offset_secs,
            t0,
        })
    }

    pub fn units(&self) -> &[UnitSeries] {
        &self.units
    }

    pub fn unit(&self, unit_id: &str) -> Option<&UnitSeries> {
        self.units.iter().find(|u| u.unit_id == unit_id)
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn step_secs(&self) -> i64 {
        self.step_secs
    }

    pub fn utc_offset_secs(&self) -> i32 {
        self.utc_offset_secs
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn t0(&self) -> usize {
        self.t0
    }

    /// Post-intervention length `T - T0`.
    pub fn horizon(&self) -> usize {
        self.len() - self.t0
    }

    pub fn treated(&self) -> impl Iterator<Item = &UnitSeries> {
        self.units.iter().filter(|u| u.role == Role::Treated)
    }

    pub fn controls(&self) -> impl Iterator<Item = &UnitSeries> {
        self.units.iter().filter(|u| u.role == Role::Control)
    }

    pub fn pre(&self) -> PanelView<'_> {
        PanelView {
            panel: self,
            start: 0,
            end: self.t0,
        }
    }

    pub fn post(&self) -> PanelView<'_> {
        PanelView {
            panel: self,
            start: self.t0,
            end: self.len(),
        }
    }

    /// Splits into the pre-intervention (`1..=T0`) and post-intervention views.
    pub fn split_pre_post(&self) -> (PanelView<'_>, PanelView<'_>) {
        (self.pre(), self.post())
    }

    /// Returns a copy with every value passed through `f(unit, index, value)`.
    pub fn map_values(&self, mut f: impl FnMut(&UnitSeries, usize, f64) -> f64) -> Result<Self> {
        let units = self
            .units
            .iter()
            .map(|u| UnitSeries {
                unit_id: u.unit_id.clone(),
                role: u.role,
                values: u.values.iter().enumerate().map(|(i, &v)| f(u, i, v)).collect(),
            })
            .collect();
        Panel::new(
            units,
            self.timestamps[0],
            self.step_secs,
            self.utc_offset_secs,
            self.t0,
        )
    }

    /// Copy of the panel with unit roles replaced; used by the placebo workflow.
    pub fn with_roles(&self, roles: &HashMap<String, Role>) -> Result<Self> {
        let units = self
            .units
            .iter()
            .map(|u| UnitSeries {
                role: roles.get(&u.unit_id).copied().unwrap_or(u.role),
                ..u.clone()
            })
            .collect();
        Panel::new(
            units,
            self.timestamps[0],
            self.step_secs,
            self.utc_offset_secs,
            self.t0,
        )
    }

    pub fn format_timestamp(&self, index: usize) -> String {
        format_epoch(self.timestamps[index], self.utc_offset_secs)
    }
}

/// Borrowed time slice of a panel. Views share the parent's timestamps.
#[derive(Debug, Clone, Copy)]
pub struct PanelView<'a> {
    panel: &'a Panel,
    start: usize,
    end: usize,
}

impl<'a> PanelView<'a> {
    pub fn panel(&self) -> &'a Panel {
        self.panel
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    /// Offset of the first view element in the parent panel.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn timestamps(&self) -> &'a [i64] {
        &self.panel.timestamps[self.start..self.end]
    }

    pub fn values(&self, unit_index: usize) -> &'a [f64] {
        &self.panel.units[unit_index].values[self.start..self.end]
    }

    pub fn unit_values(&self, unit_id: &str) -> Option<&'a [f64]> {
        let idx = self.panel.units.iter().position(|u| u.unit_id == unit_id)?;
        Some(self.values(idx))
    }

    pub fn units(&self) -> impl Iterator<Item = (&'a UnitSeries, &'a [f64])> + '_ {
        self.panel
            .units
            .iter()
            .map(move |u| (u, &u.values[self.start..self.end]))
    }
}

/// One sliding training instance: a conditioning range followed by a prediction range.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingWindow {
    pub unit_id: String,
    /// Raw (unscaled) conditioning values.
    pub context: Vec<f64>,
    /// Raw (unscaled) prediction-range values.
    pub target: Vec<f64>,
    pub scale: f64,
    /// Epoch seconds of `context[0]`.
    pub start_time: i64,
    pub step_secs: i64,
    pub utc_offset_secs: i32,
    /// Index of `context[0]` in the source panel.
    pub start_index: usize,
}

impl TrainingWindow {
    pub fn len(&self) -> usize {
        self.context.len() + self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Value at window position `i` (context first, then target).
    pub fn value(&self, i: usize) -> f64 {
        if i < self.context.len() {
            self.context[i]
        } else {
            self.target[i - self.context.len()]
        }
    }

    pub fn time_at(&self, i: usize) -> i64 {
        self.start_time + i as i64 * self.step_secs
    }
}

/// Magnitude scale for a conditioning range: `1 + mean(|context|)`.
pub fn compute_scale(context: &[f64]) -> f64 {
    if context.is_empty() {
        return 1.0;
    }
    1.0 + context.iter().map(|v| v.abs()).sum::<f64>() / context.len() as f64
}

/// Every admissible sliding window over each unit of a pre-intervention view.
///
/// Per unit there are `floor((T0 - (context_len + horizon)) / stride) + 1` windows.
pub fn make_training_windows(
    pre: &PanelView<'_>,
    horizon: usize,
    context_len: usize,
    stride: usize,
) -> Result<Vec<TrainingWindow>> {
    if stride == 0 {
        return Err(Error::Config("window stride must be >= 1".into()));
    }
    if horizon == 0 {
        return Err(Error::Config("window horizon must be >= 1".into()));
    }
    let total = context_len + horizon;
    if total > pre.len() {
        return Err(Error::Window {
            context_len,
            horizon,
            available: pre.len(),
        });
    }
    let panel = pre.panel();
    let mut windows = Vec::new();
    for (unit, values) in pre.units() {
        for s in (0..=pre.len() - total).step_by(stride) {
            let context = values[s..s + context_len].to_vec();
            let target = values[s + context_len..s + total].to_vec();
            windows.push(TrainingWindow {
                unit_id: unit.unit_id.clone(),
                scale: compute_scale(&context),
                context,
                target,
                start_time: pre.timestamps()[s],
                step_secs: panel.step_secs(),
                utc_offset_secs: panel.utc_offset_secs(),
                start_index: pre.start() + s,
            });
        }
    }
    Ok(windows)
}

/// Hour-of-day and day-of-week one-hot encoding of a local timestamp.
pub fn calendar_features(epoch_secs: i64, utc_offset_secs: i32, out: &mut [f64]) {
    debug_assert_eq!(out.len(), CALENDAR_DIM);
    out.iter_mut().for_each(|v| *v = 0.0);
    let local = epoch_secs + utc_offset_secs as i64;
    let hour = local.rem_euclid(86_400) / 3_600;
    // 1970-01-01 was a Thursday; shift so Monday = 0.
    let dow = (local.div_euclid(86_400) + 3).rem_euclid(7);
    out[hour as usize] = 1.0;
    out[24 + dow as usize] = 1.0;
}

/// Parses a grid step such as `30m`, `30min`, `1h`, `1d`, `90s` or a bare second count.
pub fn parse_step(text: &str) -> Result<i64> {
    let t = text.trim().to_ascii_lowercase();
    let split = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let n: i64 = num
        .parse()
        .map_err(|_| Error::Config(format!("invalid step `{text}`")))?;
    let mult = match unit.trim() {
        "" | "s" | "sec" => 1,
        "m" | "min" => 60,
        "h" | "hr" => 3_600,
        "d" => 86_400,
        _ => return Err(Error::Config(format!("invalid step unit in `{text}`"))),
    };
    if n <= 0 {
        return Err(Error::Config(format!("step must be positive, got `{text}`")));
    }
    Ok(n * mult)
}

pub fn parse_timestamp(text: &str) -> Option<DateTime<FixedOffset>> {
    DateTime::parse_from_rfc3339(text.trim()).ok()
}

pub fn format_epoch(epoch_secs: i64, utc_offset_secs: i32) -> String {
    let offset = FixedOffset::east_opt(utc_offset_secs).expect("offset validated at ingestion");
    offset
        .timestamp_opt(epoch_secs, 0)
        .single()
        .expect("in-range timestamp")
        .to_rfc3339_opts(SecondsFormat::AutoSi, false)
}

#[derive(Debug, Deserialize)]
struct Row {
    timestamp: String,
    unit_id: String,
    value: f64,
}

/// Reads a long-format `timestamp,unit_id,value` CSV into a validated panel.
pub fn load_panel(csv_path: impl AsRef<Path>, schema: &SchemaConfig) -> Result<Panel> {
    let path = csv_path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel(file, schema)
}

pub fn read_panel<R: Read>(reader: R, schema: &SchemaConfig) -> Result<Panel> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut cells: HashMap<String, BTreeMap<i64, f64>> = HashMap::new();
    let mut offset: Option<i32> = None;
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = rec.map_err(|e| IngestError::Malformed {
            line,
            reason: e.to_string(),
        })?;
        let ts = parse_timestamp(&row.timestamp).ok_or_else(|| IngestError::Malformed {
            line,
            reason: format!("unparseable timestamp `{}`", row.timestamp),
        })?;
        if !row.value.is_finite() {
            return Err(IngestError::Malformed {
                line,
                reason: "non-finite value".into(),
            }
            .into());
        }
        offset.get_or_insert(ts.offset().local_minus_utc());
        let series = cells.entry(row.unit_id.clone()).or_default();
        if series.insert(ts.timestamp(), row.value).is_some() {
            return Err(IngestError::Duplicate {
                unit: row.unit_id,
                timestamp: row.timestamp,
            }
            .into());
        }
    }
    let offset = offset.ok_or_else(|| IngestError::Malformed {
        line: 1,
        reason: "no data rows".into(),
    })?;

    let named: Vec<(&String, Role)> = schema
        .treated
        .iter()
        .map(|u| (u, Role::Treated))
        .chain(schema.control.iter().map(|u| (u, Role::Control)))
        .collect();
    for (u, _) in &named {
        if !cells.contains_key(*u) {
            return Err(IngestError::UnknownUnit((*u).clone()).into());
        }
    }

    let all_times: Vec<i64> = {
        let mut v: Vec<i64> = named
            .iter()
            .flat_map(|(u, _)| cells[*u].keys().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let step = match &schema.step {
        Some(s) => parse_step(s)?,
        None => all_times
            .windows(2)
            .map(|w| w[1] - w[0])
            .min()
            .ok_or_else(|| Error::Config("cannot infer step from a single timestamp".into()))?,
    };
    let start = all_times[0];
    let end = *all_times.last().unwrap();
    for &t in &all_times {
        if (t - start) % step != 0 {
            return Err(IngestError::OffGrid {
                timestamp: format_epoch(t, offset),
                step_secs: step,
            }
            .into());
        }
    }
    let len = ((end - start) / step + 1) as usize;

    let mut units = Vec::with_capacity(named.len());
    for (unit_id, role) in named {
        let series = &cells[unit_id];
        let mut values: Vec<Option<f64>> = vec![None; len];
        for (&t, &v) in series {
            values[((t - start) / step) as usize] = Some(v);
        }
        let values = fill_gaps(unit_id, values, schema.gap_policy, |i| {
            format_epoch(start + i as i64 * step, offset)
        })?;
        units.push(UnitSeries {
            unit_id: unit_id.clone(),
            role,
            values,
        });
    }

    let t0_ts = parse_timestamp(&schema.t0)
        .ok_or_else(|| Error::Config(format!("unparseable t0 timestamp `{}`", schema.t0)))?
        .timestamp();
    if t0_ts < start || t0_ts > end || (t0_ts - start) % step != 0 {
        return Err(Error::Config(format!(
            "t0 `{}` is not a grid timestamp of the panel",
            schema.t0
        )));
    }
    let t0 = ((t0_ts - start) / step) as usize + 1;
    Panel::new(units, start, step, offset, t0)
}

fn fill_gaps(
    unit_id: &str,
    values: Vec<Option<f64>>,
    policy: GapPolicy,
    ts: impl Fn(usize) -> String,
) -> Result<Vec<f64>> {
    let gap_err = |i: usize| -> Error {
        IngestError::Gap {
            unit: unit_id.to_string(),
            timestamp: ts(i),
        }
        .into()
    };
    let mut out = Vec::with_capacity(values.len());
    let mut i = 0;
    while i < values.len() {
        match values[i] {
            Some(v) => {
                out.push(v);
                i += 1;
            }
            None => {
                let run_end = (i..values.len())
                    .find(|&j| values[j].is_some())
                    .unwrap_or(values.len());
                let run = run_end - i;
                if policy == GapPolicy::Fail || i == 0 || run_end == values.len() || run > MAX_FILL_GAP
                {
                    return Err(gap_err(i));
                }
                let left = out[i - 1];
                let right = values[run_end].unwrap();
                for k in 1..=run {
                    let w = k as f64 / (run + 1) as f64;
                    out.push(left + (right - left) * w);
                }
                i = run_end;
            }
        }
    }
    Ok(out)
}

/// Writes the panel in long format. Values use the shortest round-trip decimal form.
pub fn write_panel<W: Write>(panel: &Panel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "unit_id", "value"])?;
    for t in 0..panel.len() {
        let ts = panel.format_timestamp(t);
        for u in &panel.units {
            w.write_record([ts.as_str(), u.unit_id.as_str(), &u.values[t].to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<panel csv>", e))?;
    Ok(())
}

pub fn save_panel(panel: &Panel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_panel(panel, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(t0: &str) -> SchemaConfig {
        SchemaConfig {
            t0: t0.into(),
            treated: vec!["a".into()],
            control: vec!["b".into()],
            step: Some("1h".into()),
            gap_policy: GapPolicy::Fail,
        }
    }

    const CSV: &str = "timestamp,unit_id,value\n\
        2020-01-01T00:00:00+01:00,a,1\n2020-01-01T00:00:00+01:00,b,10\n\
        2020-01-01T01:00:00+01:00,a,2\n2020-01-01T01:00:00+01:00,b,20\n\
        2020-01-01T02:00:00+01:00,a,3\n2020-01-01T02:00:00+01:00,b,30\n\
        2020-01-01T03:00:00+01:00,a,4\n2020-01-01T03:00:00+01:00,b,40\n";

    #[test]
    fn ingests_complete_panel() {
        let p = read_panel(CSV.as_bytes(), &schema("2020-01-01T01:00:00+01:00")).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.units().len(), 2);
        assert_eq!(p.t0(), 2);
        assert_eq!(p.unit("b").unwrap().values, vec![10.0, 20.0, 30.0, 40.0]);
        assert_eq!(p.step_secs(), 3600);
    }

    #[test]
    fn linear_fill_of_interior_gap() {
        let csv: String = CSV
            .lines()
            .filter(|l| !l.starts_with("2020-01-01T01:00:00+01:00,a"))
            .map(|l| format!("{l}\n"))
            .collect();
        let mut s = schema("2020-01-01T01:00:00+01:00");
        assert!(matches!(
            read_panel(csv.as_bytes(), &s),
            Err(Error::Ingest(IngestError::Gap { .. }))
        ));
        s.gap_policy = GapPolicy::Linear;
        let p = read_panel(csv.as_bytes(), &s).unwrap();
        assert_eq!(p.unit("a").unwrap().values[1], 2.0);
    }

    #[test]
    fn edge_gap_is_not_filled() {
        let csv: String = CSV
            .lines()
            .filter(|l| !l.starts_with("2020-01-01T03:00:00+01:00,a"))
            .map(|l| format!("{l}\n"))
            .collect();
        let mut s = schema("2020-01-01T01:00:00+01:00");
        s.gap_policy = GapPolicy::Linear;
        assert!(matches!(
            read_panel(csv.as_bytes(), &s),
            Err(Error::Ingest(IngestError::Gap { .. }))
        ));
    }

    #[test]
    fn duplicate_rows_rejected() {
        let csv = format!("{CSV}2020-01-01T03:00:00+01:00,a,5\n");
        assert!(matches!(
            read_panel(csv.as_bytes(), &schema("2020-01-01T01:00:00+01:00")),
            Err(Error::Ingest(IngestError::Duplicate { .. }))
        ));
    }

    #[test]
    fn t0_at_last_timestamp_is_config_error() {
        let err = read_panel(CSV.as_bytes(), &schema("2020-01-01T03:00:00+01:00")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = read_panel(CSV.as_bytes(), &schema("2021-01-01T03:00:00+01:00")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn split_lengths() {
        let units = vec![
            UnitSeries {
                unit_id: "a".into(),
                role: Role::Treated,
                values: (0..10).map(f64::from).collect(),
            },
            UnitSeries {
                unit_id: "b".into(),
                role: Role::Control,
                values: (0..10).map(|v| v as f64 * 2.0).collect(),
            },
        ];
        let p = Panel::new(units, 0, 3600, 0, 7).unwrap();
        let (pre, post) = p.split_pre_post();
        assert_eq!(pre.len(), 7);
        assert_eq!(post.len(), 3);
        assert_eq!(p.horizon(), 3);
        let joined: Vec<f64> = pre.values(1).iter().chain(post.values(1)).copied().collect();
        assert_eq!(joined, p.units()[1].values);
        assert_eq!(post.timestamps()[0], pre.timestamps()[6] + 3600);
    }

    #[test]
    fn scale_examples() {
        assert_eq!(compute_scale(&[2.0, 4.0, 6.0]), 5.0);
        let scaled: Vec<f64> = [2.0, 4.0, 6.0].iter().map(|v| v / 5.0).collect();
        for (a, b) in scaled.iter().zip([0.4, 0.8, 1.2]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(compute_scale(&[0.0, 0.0]), 1.0);
        let s = compute_scale(&[3.5, -1.25]);
        assert!(((7.25 / s) * s - 7.25).abs() < 1e-12);
    }

    fn panel_of_len(t: usize, t0: usize) -> Panel {
        let units = ["a", "b"]
            .iter()
            .zip([Role::Treated, Role::Control])
            .map(|(id, role)| UnitSeries {
                unit_id: id.to_string(),
                role,
                values: (0..t).map(|v| v as f64).collect(),
            })
            .collect();
        Panel::new(units, 0, 1800, 0, t0).unwrap()
    }

    #[test]
    fn window_counts() {
        let p = panel_of_len(120, 100);
        let w = make_training_windows(&p.pre(), 20, 5, 1).unwrap();
        assert_eq!(w.len(), 2 * 76);
        assert!(w.iter().all(|w| w.start_index + w.len() <= 100));

        let p = panel_of_len(40, 25);
        assert_eq!(make_training_windows(&p.pre(), 20, 5, 1).unwrap().len(), 2);

        let p = panel_of_len(40, 24);
        assert!(matches!(
            make_training_windows(&p.pre(), 20, 5, 1),
            Err(Error::Window { .. })
        ));
    }

    #[test]
    fn calendar_one_hot() {
        let mut f = [0.0; CALENDAR_DIM];
        // 2020-01-06T13:00:00Z, a Monday.
        calendar_features(1_578_315_600, 0, &mut f);
        assert_eq!(f[13], 1.0);
        assert_eq!(f[24], 1.0);
        assert_eq!(f.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn step_parsing() {
        assert_eq!(parse_step("30m").unwrap(), 1800);
        assert_eq!(parse_step("30min").unwrap(), 1800);
        assert_eq!(parse_step("1h").unwrap(), 3600);
        assert_eq!(parse_step("900").unwrap(), 900);
        assert!(parse_step("h").is_err());
        assert!(parse_step("0s").is_err());
    }
}
