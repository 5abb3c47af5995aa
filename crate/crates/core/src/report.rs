//! Repeat-protocol aggregation and table rendering.
//!
//! Runs are averaged within each (model, scenario, repeat) into repeat-level
//! percentages; repeats are then summarized by their mean and sample (n - 1)
//! standard deviation. Each model also gets an `Avg` row: the unweighted
//! mean of its scenario means.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::logio::{RunRecord, WorkflowSpec};
use crate::metrics::{score_run, ScoreRow};

pub const AVG_SCENARIO: &str = "Avg";

/// One run's scores with its grouping labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRun {
    pub model: String,
    pub scenario: String,
    pub repeat: u32,
    pub score: ScoreRow<f64>,
}

impl ScoredRun {
    pub fn from_record(record: &RunRecord, spec: &WorkflowSpec) -> Result<Self> {
        Ok(Self {
            model: record.model.clone(),
            scenario: record.scenario.clone(),
            repeat: record.repeat,
            score: score_run(record, spec)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Tsr,
    Hf1,
    Asr,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Tsr, Metric::Hf1, Metric::Asr];

    pub fn key(self) -> &'static str {
        match self {
            Metric::Tsr => "tsr",
            Metric::Hf1 => "hf1",
            Metric::Asr => "asr",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Tsr => "TSR",
            Metric::Hf1 => "HF1",
            Metric::Asr => "ASR",
        }
    }

    fn of(self, row: &ScoreRow<f64>) -> f64 {
        match self {
            Metric::Tsr => row.tsr,
            Metric::Hf1 => row.hf1,
            Metric::Asr => row.asr,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsr" => Ok(Metric::Tsr),
            "hf1" => Ok(Metric::Hf1),
            "asr" => Ok(Metric::Asr),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

/// Mean (percent) and sample standard deviation (percentage points).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub model: String,
    /// Scenario id, or [`AVG_SCENARIO`].
    pub scenario: String,
    pub tsr: Stat,
    pub hf1: Stat,
    pub asr: Stat,
    pub n_repeats: usize,
}

impl AggregateRow {
    pub fn stat(&self, metric: Metric) -> Stat {
        match metric {
            Metric::Tsr => self.tsr,
            Metric::Hf1 => self.hf1,
            Metric::Asr => self.asr,
        }
    }

    pub fn is_average(&self) -> bool {
        self.scenario == AVG_SCENARIO
    }

    /// Rendered TSR and HF1 both read 100.00 while rendered ASR does not.
    pub fn hidden_deviation(&self) -> bool {
        let hundred = "100.00";
        pct(self.tsr.mean) == hundred
            && pct(self.hf1.mean) == hundred
            && pct(self.asr.mean) != hundred
    }
}

/// Order-independent sum: values are sorted before adding.
fn stable_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Mean and sample standard deviation; the deviation is 0 for one value.
pub fn mean_std(values: &[f64]) -> Stat {
    let n = values.len();
    if n == 0 {
        return Stat {
            mean: f64::NAN,
            std: f64::NAN,
        };
    }
    let mut v = values.to_vec();
    let mean = stable_sum(&mut v) / n as f64;
    if n == 1 {
        return Stat { mean, std: 0.0 };
    }
    let mut sq: Vec<f64> = values.iter().map(|x| (x - mean).powi(2)).collect();
    let var = stable_sum(&mut sq) / (n - 1) as f64;
    Stat {
        mean,
        std: var.sqrt(),
    }
}

type Key = (String, String);

/// Per (model, scenario): repeat index -> repeat-level percentage per metric.
/// Per-repeat means of (TSR, HF1, ASR).
type RepeatMeans = BTreeMap<u32, [f64; 3]>;

fn repeat_levels<'a, I>(scores: I) -> BTreeMap<Key, RepeatMeans>
where
    I: IntoIterator<Item = &'a ScoredRun>,
{
    let mut buckets: BTreeMap<Key, BTreeMap<u32, [Vec<f64>; 3]>> = BTreeMap::new();
    for run in scores {
        let per_repeat = buckets
            .entry((run.model.clone(), run.scenario.clone()))
            .or_default()
            .entry(run.repeat)
            .or_default();
        for (slot, metric) in per_repeat.iter_mut().zip(Metric::ALL) {
            slot.push(metric.of(&run.score));
        }
    }
    buckets
        .into_iter()
        .map(|(key, repeats)| {
            let levels = repeats
                .into_iter()
                .map(|(r, mut vals)| {
                    let level = |v: &mut Vec<f64>| 100.0 * stable_sum(v) / v.len() as f64;
                    (
                        r,
                        [
                            level(&mut vals[0]),
                            level(&mut vals[1]),
                            level(&mut vals[2]),
                        ],
                    )
                })
                .collect();
            (key, levels)
        })
        .collect()
}

fn row_from_levels(model: &str, scenario: &str, levels: &[[f64; 3]]) -> AggregateRow {
    let stat = |i: usize| mean_std(&levels.iter().map(|l| l[i]).collect::<Vec<_>>());
    AggregateRow {
        model: model.to_string(),
        scenario: scenario.to_string(),
        tsr: stat(0),
        hf1: stat(1),
        asr: stat(2),
        n_repeats: levels.len(),
    }
}

/// Aggregates per-run scores into scenario rows plus one `Avg` row per model.
///
/// Output order: models by name, each model's scenarios by id, then its
/// `Avg` row. The `Avg` deviation is taken over the per-repeat averages of
/// the repeats present in every scenario of that model.
pub fn aggregate<'a, I>(scores: I) -> Result<Vec<AggregateRow>>
where
    I: IntoIterator<Item = &'a ScoredRun>,
{
    let levels = repeat_levels(scores);
    let mut by_model: BTreeMap<&str, Vec<(&str, &RepeatMeans)>> = BTreeMap::new();
    for ((model, scenario), repeats) in &levels {
        if scenario == AVG_SCENARIO {
            return Err(Error::Aggregate(format!(
                "scenario id {AVG_SCENARIO:?} is reserved"
            )));
        }
        by_model.entry(model).or_default().push((scenario, repeats));
    }

    let mut out = Vec::new();
    for (model, scenarios) in by_model {
        let mut rows = Vec::new();
        for (scenario, repeats) in &scenarios {
            let vals: Vec<[f64; 3]> = repeats.values().copied().collect();
            rows.push(row_from_levels(model, scenario, &vals));
        }

        let common: BTreeSet<u32> = scenarios
            .iter()
            .map(|(_, r)| r.keys().copied().collect::<BTreeSet<_>>())
            .reduce(|a, b| &a & &b)
            .unwrap_or_default();
        let per_repeat: Vec<[f64; 3]> = common
            .iter()
            .map(|r| {
                let mut avg = [0.0; 3];
                for (i, slot) in avg.iter_mut().enumerate() {
                    let mut v: Vec<f64> = scenarios.iter().map(|(_, reps)| reps[r][i]).collect();
                    *slot = stable_sum(&mut v) / v.len() as f64;
                }
                avg
            })
            .collect();
        let spread = row_from_levels(model, AVG_SCENARIO, &per_repeat);
        let mean_of_means = |m: Metric| {
            let mut v: Vec<f64> = rows.iter().map(|r| r.stat(m).mean).collect();
            stable_sum(&mut v) / v.len() as f64
        };
        let avg_stat = |m: Metric| Stat {
            mean: mean_of_means(m),
            std: if per_repeat.is_empty() {
                0.0
            } else {
                spread.stat(m).std
            },
        };
        let avg = AggregateRow {
            model: model.to_string(),
            scenario: AVG_SCENARIO.to_string(),
            tsr: avg_stat(Metric::Tsr),
            hf1: avg_stat(Metric::Hf1),
            asr: avg_stat(Metric::Asr),
            n_repeats: per_repeat.len(),
        };
        out.extend(rows);
        out.push(avg);
    }
    Ok(out)
}

/// Two-decimal percentage, ties to even, never `-0.00`.
pub fn pct(x: f64) -> String {
    fixed(x, 2)
}

fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn signed(x: f64, decimals: usize) -> String {
    let s = fixed(x, decimals);
    if s.starts_with('-') {
        s
    } else {
        format!("+{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(Error::Config(format!(
                "unknown format {other:?} (expected csv or md)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SortKey {
    /// Models ordered by one scenario's metric mean, descending; ties by name.
    Descending { scenario: String, metric: Metric },
    /// Models ordered by name.
    Model,
}

impl Default for SortKey {
    fn default() -> Self {
        SortKey::Descending {
            scenario: AVG_SCENARIO.to_string(),
            metric: Metric::Asr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Highlight {
    #[default]
    HiddenDeviation,
    Off,
}

fn model_order(rows: &[AggregateRow], sort: &SortKey) -> Vec<String> {
    let mut models: Vec<String> = Vec::new();
    for r in rows {
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
    }
    match sort {
        SortKey::Model => models.sort(),
        SortKey::Descending { scenario, metric } => {
            let key = |m: &str| {
                rows.iter()
                    .find(|r| r.model == m && &r.scenario == scenario)
                    .map(|r| r.stat(*metric).mean)
                    .unwrap_or(f64::NEG_INFINITY)
            };
            models.sort_by(|a, b| key(b).total_cmp(&key(a)).then_with(|| a.cmp(b)));
        }
    }
    models
}

/// Rows grouped by model in sort order; within a model, input order.
fn sorted_rows<'a>(rows: &'a [AggregateRow], sort: &SortKey) -> Vec<&'a AggregateRow> {
    let order = model_order(rows, sort);
    let rank = |m: &str| order.iter().position(|o| o == m).unwrap_or(usize::MAX);
    let mut out: Vec<&AggregateRow> = rows.iter().collect();
    out.sort_by_key(|r| rank(&r.model));
    out
}

pub fn render(
    rows: &[AggregateRow],
    format: Format,
    sort: &SortKey,
    highlight: Highlight,
) -> Result<String> {
    match format {
        Format::Csv => render_csv(rows, sort, highlight),
        Format::Markdown => Ok(render_markdown(rows, sort, highlight)),
    }
}

fn render_csv(rows: &[AggregateRow], sort: &SortKey, highlight: Highlight) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "model",
        "scenario",
        "tsr_mean",
        "tsr_std",
        "hf1_mean",
        "hf1_std",
        "asr_mean",
        "asr_std",
        "n_repeats",
        "hidden_deviation",
    ])?;
    for r in sorted_rows(rows, sort) {
        let flag = highlight == Highlight::HiddenDeviation && r.hidden_deviation();
        w.write_record([
            r.model.clone(),
            r.scenario.clone(),
            pct(r.tsr.mean),
            pct(r.tsr.std),
            pct(r.hf1.mean),
            pct(r.hf1.std),
            pct(r.asr.mean),
            pct(r.asr.std),
            r.n_repeats.to_string(),
            flag.to_string(),
        ])?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is built from UTF-8 strings"))
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn render_markdown(rows: &[AggregateRow], sort: &SortKey, highlight: Highlight) -> String {
    let mut scenarios: Vec<&str> = Vec::new();
    for r in rows.iter().filter(|r| !r.is_average()) {
        if !scenarios.contains(&r.scenario.as_str()) {
            scenarios.push(&r.scenario);
        }
    }
    scenarios.sort();
    if rows.iter().any(AggregateRow::is_average) {
        scenarios.push(AVG_SCENARIO);
    }

    let mut out = String::from("| Model |");
    for s in &scenarios {
        for m in Metric::ALL {
            out.push_str(&format!(" {s} {} |", m.label()));
        }
    }
    out.push_str(" n | Hidden deviation |\n|---|");
    for _ in 0..scenarios.len() * 3 {
        out.push_str("---:|");
    }
    out.push_str("---:|---|\n");

    for model in model_order(rows, sort) {
        let mut flagged = Vec::new();
        let mut n = 0;
        out.push_str(&format!("| {} |", md_escape(&model)));
        for s in &scenarios {
            match rows.iter().find(|r| r.model == model && r.scenario == *s) {
                Some(r) => {
                    let hit = highlight == Highlight::HiddenDeviation && r.hidden_deviation();
                    if hit {
                        flagged.push(md_escape(s));
                    }
                    if r.is_average() || n == 0 {
                        n = r.n_repeats;
                    }
                    for m in Metric::ALL {
                        let st = r.stat(m);
                        let cell = format!("{} ± {}", pct(st.mean), pct(st.std));
                        if hit && m == Metric::Asr {
                            out.push_str(&format!(" **{cell}** |"));
                        } else {
                            out.push_str(&format!(" {cell} |"));
                        }
                    }
                }
                None => out.push_str(" - | - | - |"),
            }
        }
        let flag = if flagged.is_empty() {
            String::new()
        } else {
            format!("**{}**", flagged.join(", "))
        };
        out.push_str(&format!(" {n} | {flag} |\n"));
    }
    out
}

/// One (model, scenario) value, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueRow {
    pub model: String,
    pub scenario: String,
    pub value: f64,
}

/// Scenario means of `metric`, excluding `Avg` rows.
pub fn values_of(rows: &[AggregateRow], metric: Metric) -> Vec<ValueRow> {
    rows.iter()
        .filter(|r| !r.is_average())
        .map(|r| ValueRow {
            model: r.model.clone(),
            scenario: r.scenario.clone(),
            value: r.stat(metric).mean,
        })
        .collect()
}

/// Reads `model`, `scenario` and a value column from CSV. The value column
/// is `<metric>_mean`, `<metric>` or `value`, whichever appears first.
/// `Avg` rows are skipped.
pub fn read_value_table<R: Read>(input: R, metric: Metric) -> Result<Vec<ValueRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let missing = |what: &str| Error::Schema {
        path: "header".into(),
        message: format!("missing column {what}"),
    };
    let model_col = find("model").ok_or_else(|| missing("model"))?;
    let scenario_col = find("scenario").ok_or_else(|| missing("scenario"))?;
    let value_col = [
        format!("{}_mean", metric.key()),
        metric.key().to_string(),
        "value".to_string(),
    ]
    .iter()
    .find_map(|c| find(c))
    .ok_or_else(|| missing(&format!("{}_mean", metric.key())))?;

    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let field = |c: usize| record.get(c).map(str::trim).unwrap_or("");
        if field(scenario_col) == AVG_SCENARIO {
            continue;
        }
        let value = field(value_col).parse::<f64>().map_err(|_| Error::Schema {
            path: format!("line {line}"),
            message: format!("value {:?} is not a number", field(value_col)),
        })?;
        out.push(ValueRow {
            model: field(model_col).to_string(),
            scenario: field(scenario_col).to_string(),
            value,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow {
    pub model: String,
    pub scenario: String,
    pub baseline: f64,
    pub ours: f64,
    /// `ours - baseline`, in percentage points.
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Baseline,
    Ours,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport {
    pub rows: Vec<DeltaRow>,
    /// Keys present on one side only; excluded from rows and ranking.
    pub unmatched: Vec<(String, String, Side)>,
    /// Models by mean delta across their matched scenarios, descending.
    pub ranking: Vec<(String, f64)>,
}

pub fn compare_delta(baseline: &[ValueRow], ours: &[ValueRow]) -> Result<DeltaReport> {
    let index = |rows: &[ValueRow], side: &str| -> Result<BTreeMap<Key, f64>> {
        let mut map = BTreeMap::new();
        for r in rows {
            if map
                .insert((r.model.clone(), r.scenario.clone()), r.value)
                .is_some()
            {
                return Err(Error::Schema {
                    path: side.to_string(),
                    message: format!("duplicate row for {} / {}", r.model, r.scenario),
                });
            }
        }
        Ok(map)
    };
    let base = index(baseline, "baseline")?;
    let our = index(ours, "ours")?;

    let mut rows = Vec::new();
    let mut unmatched = Vec::new();
    for (key, &h) in &base {
        match our.get(key) {
            Some(&o) => rows.push(DeltaRow {
                model: key.0.clone(),
                scenario: key.1.clone(),
                baseline: h,
                ours: o,
                delta: o - h,
            }),
            None => unmatched.push((key.0.clone(), key.1.clone(), Side::Baseline)),
        }
    }
    for key in our.keys().filter(|k| !base.contains_key(*k)) {
        unmatched.push((key.0.clone(), key.1.clone(), Side::Ours));
    }

    let mut per_model: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        per_model.entry(&r.model).or_default().push(r.delta);
    }
    let mut ranking: Vec<(String, f64)> = per_model
        .into_iter()
        .map(|(m, mut d)| {
            let n = d.len() as f64;
            (m.to_string(), stable_sum(&mut d) / n)
        })
        .collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(DeltaReport {
        rows,
        unmatched,
        ranking,
    })
}

/// Delta gains at or above this many points are emphasized in markdown.
pub const NOTABLE_GAIN: f64 = 20.0;

pub fn render_delta(report: &DeltaReport, format: Format, decimals: usize) -> Result<String> {
    let rank = |m: &str| {
        report
            .ranking
            .iter()
            .position(|(r, _)| r == m)
            .unwrap_or(usize::MAX)
    };
    let mut rows: Vec<&DeltaRow> = report.rows.iter().collect();
    rows.sort_by(|a, b| {
        rank(&a.model)
            .cmp(&rank(&b.model))
            .then_with(|| a.scenario.cmp(&b.scenario))
    });
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["model", "scenario", "baseline", "ours", "delta"])?;
            for r in rows {
                w.write_record([
                    r.model.clone(),
                    r.scenario.clone(),
                    fixed(r.baseline, decimals),
                    fixed(r.ours, decimals),
                    signed(r.delta, decimals),
                ])?;
            }
            finish_csv(w)
        }
        Format::Markdown => {
            let scenarios: BTreeSet<&str> = rows.iter().map(|r| r.scenario.as_str()).collect();
            let mut out = String::from("| Model |");
            for s in &scenarios {
                out.push_str(&format!(" {s} H | {s} O | {s} Δ |"));
            }
            out.push_str(" Avg Δ |\n|---|");
            for _ in 0..scenarios.len() * 3 + 1 {
                out.push_str("---:|");
            }
            out.push('\n');
            for (model, avg) in &report.ranking {
                out.push_str(&format!("| {} |", md_escape(model)));
                for s in &scenarios {
                    match rows.iter().find(|r| &r.model == model && r.scenario == *s) {
                        Some(r) => {
                            let d = signed(r.delta, decimals);
                            let d = if r.delta >= NOTABLE_GAIN {
                                format!("**{d}**")
                            } else {
                                d
                            };
                            out.push_str(&format!(
                                " {} | {} | {d} |",
                                fixed(r.baseline, decimals),
                                fixed(r.ours, decimals)
                            ));
                        }
                        None => out.push_str(" - | - | - |"),
                    }
                }
                out.push_str(&format!(" {} |\n", signed(*avg, decimals)));
            }
            Ok(out)
        }
    }
}

/// Writes rendered text to `sink`.
pub fn write_text<W: Write>(text: &str, mut sink: W) -> Result<()> {
    sink.write_all(text.as_bytes())?;
    sink.flush()?;
    Ok(())
}
