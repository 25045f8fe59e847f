//! The experiment grid: synthetic archetypes, amputation × imputation runs,
//! timing, and CSV/SVG emission.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use log::warn;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imputation::{impute, Algorithm, ImputeOptions};
use crate::metrics::{mape, rmse};
use crate::missing::{create_missing, seeded_rng};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    None,
    Trend,
    Seasonal,
    TrendSeasonal,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] = [
        SyntheticKind::None,
        SyntheticKind::Trend,
        SyntheticKind::Seasonal,
        SyntheticKind::TrendSeasonal,
    ];

    pub fn has_trend(self) -> bool {
        matches!(self, SyntheticKind::Trend | SyntheticKind::TrendSeasonal)
    }

    pub fn has_seasonality(self) -> bool {
        matches!(self, SyntheticKind::Seasonal | SyntheticKind::TrendSeasonal)
    }

    pub fn label(self) -> &'static str {
        match self {
            SyntheticKind::None => "none",
            SyntheticKind::Trend => "trend",
            SyntheticKind::Seasonal => "seasonal",
            SyntheticKind::TrendSeasonal => "trend_seasonal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    pub frequency: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

pub const SYNTHETIC_BASE: f64 = 100.0;
pub const SYNTHETIC_SLOPE: f64 = 0.5;
pub const SYNTHETIC_AMPLITUDE: f64 = 10.0;

/// `100 + 0.5 t + 10 sin(2 pi t / f) + N(0, sigma^2)` for `t = 1..=n`, with
/// the trend and seasonal terms present according to `kind`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<TimeSeries> {
    if spec.kind.has_seasonality() && spec.frequency < 2 {
        return Err(Error::InvalidConfig(format!(
            "{} series need frequency >= 2",
            spec.kind.label()
        )));
    }
    if !(spec.noise_sigma >= 0.0) {
        return Err(Error::InvalidConfig("noise_sigma must be >= 0".into()));
    }
    let mut rng = seeded_rng(spec.seed);
    let f = spec.frequency.max(1) as f64;
    let values: Vec<f64> = (1..=spec.n)
        .map(|t| {
            let t = t as f64;
            let mut v = SYNTHETIC_BASE;
            if spec.kind.has_trend() {
                v += SYNTHETIC_SLOPE * t;
            }
            if spec.kind.has_seasonality() {
                v += SYNTHETIC_AMPLITUDE * (2.0 * std::f64::consts::PI * t / f).sin();
            }
            if spec.noise_sigma > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                v += spec.noise_sigma * z;
            }
            v
        })
        .collect();
    TimeSeries::from_complete(&values, spec.frequency.max(1))
}

/// The experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub lags: usize,
    /// Run grid cells on the rayon pool. Runtimes are then measured under
    /// contention; the metrics are unaffected.
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            rates: vec![0.1, 0.3, 0.5, 0.7],
            seeds: (1..=25).collect(),
            algorithms: Algorithm::BENCHMARKED.to_vec(),
            lags: 10,
            parallel: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rates.is_empty() || self.seeds.is_empty() || self.algorithms.is_empty() {
            return Err(Error::InvalidConfig(
                "rates, seeds and algorithms must be non-empty".into(),
            ));
        }
        if let Some(r) = self.rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidConfig(format!("rate {r} is not a nonnegative number")));
        }
        if self.lags < 1 {
            return Err(Error::InvalidConfig("lags must be >= 1".into()));
        }
        Ok(())
    }
}

/// One imputation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub rate: f64,
    pub seed: u64,
    /// NaN when the run failed or had nothing to evaluate.
    pub rmse: f64,
    pub mape: f64,
    pub runtime_seconds: f64,
    pub n_missing: usize,
}

impl RunRecord {
    /// Equality treating NaN metrics as equal and ignoring runtime.
    pub fn same_outcome(&self, other: &RunRecord) -> bool {
        let eq = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        self.dataset == other.dataset
            && self.algorithm == other.algorithm
            && self.rate == other.rate
            && self.seed == other.seed
            && eq(self.rmse, other.rmse)
            && eq(self.mape, other.mape)
            && self.n_missing == other.n_missing
    }
}

/// Runs one (dataset, rate, seed) cell for every configured algorithm.
fn run_cell(
    config: &ExperimentConfig,
    name: &str,
    series: &TimeSeries,
    rate: f64,
    seed: u64,
) -> Result<Vec<RunRecord>> {
    let amputated = create_missing(series, rate, seed)?;
    let indices = amputated.zero_based();
    let options = ImputeOptions {
        lags: config.lags,
        ..ImputeOptions::default()
    };
    let records = config
        .algorithms
        .iter()
        .map(|&algorithm| {
            let started = Instant::now();
            let result = impute(&amputated.data, algorithm, &options);
            let runtime_seconds = started.elapsed().as_secs_f64();
            let mut record = RunRecord {
                dataset: name.to_string(),
                algorithm,
                rate,
                seed,
                rmse: f64::NAN,
                mape: f64::NAN,
                runtime_seconds,
                n_missing: indices.len(),
            };
            match result {
                Ok(outcome) => {
                    match rmse(&outcome.series, series, &indices) {
                        Ok(v) => record.rmse = v,
                        Err(e) => warn!("{name}/{algorithm}/rate {rate}/seed {seed}: rmse: {e}"),
                    }
                    match mape(&outcome.series, series, &indices) {
                        Ok(v) => record.mape = v,
                        Err(e) => warn!("{name}/{algorithm}/rate {rate}/seed {seed}: mape: {e}"),
                    }
                }
                Err(e) => warn!("{name}/{algorithm}/rate {rate}/seed {seed}: imputation failed: {e}"),
            }
            record
        })
        .collect();
    Ok(records)
}

/// Runs the full grid. Records come back ordered by dataset, algorithm,
/// rate and seed, each in configuration order.
pub fn run_benchmark(
    config: &ExperimentConfig,
    datasets: &[(String, TimeSeries)],
) -> Result<Vec<RunRecord>> {
    config.validate()?;
    if let Some((name, _)) = datasets.iter().find(|(_, s)| !s.is_complete()) {
        return Err(Error::IncompleteDataset(name.clone()));
    }
    let cells: Vec<(usize, usize, usize)> = (0..datasets.len())
        .flat_map(|d| {
            (0..config.rates.len())
                .flat_map(move |r| (0..config.seeds.len()).map(move |s| (d, r, s)))
        })
        .collect();
    let run = |&(d, r, s): &(usize, usize, usize)| {
        let (name, series) = &datasets[d];
        run_cell(config, name, series, config.rates[r], config.seeds[s])
            .map(|records| records.into_iter().enumerate().map(move |(a, rec)| ((d, a, r, s), rec)))
    };
    let batches: Vec<_> = if config.parallel {
        cells.par_iter().map(run).collect::<Result<_>>()?
    } else {
        cells.iter().map(run).collect::<Result<_>>()?
    };
    let mut keyed: Vec<_> = batches.into_iter().flatten().collect();
    keyed.sort_by_key(|(key, _)| *key);
    Ok(keyed.into_iter().map(|(_, rec)| rec).collect())
}

pub const RESULTS_HEADER: [&str; 8] = [
    "dataset",
    "algorithm",
    "rate",
    "seed",
    "rmse",
    "mape",
    "runtime_seconds",
    "n_missing",
];

/// 17 significant digits: lossless for every finite f64.
fn format_metric(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_metric(s: &str, line: usize) -> Result<f64> {
    if s == "NaN" {
        return Ok(f64::NAN);
    }
    s.parse().map_err(|_| Error::ParseError {
        line,
        message: format!("invalid number `{s}`"),
    })
}

pub fn emit_results_csv(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(RESULTS_HEADER)?;
    for r in records {
        writer.write_record([
            r.dataset.clone(),
            r.algorithm.label().to_string(),
            r.rate.to_string(),
            r.seed.to_string(),
            format_metric(r.rmse),
            format_metric(r.mape),
            format_metric(r.runtime_seconds),
            r.n_missing.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| row.get(i).unwrap_or_default();
        let bad = |what: &str| Error::ParseError {
            line,
            message: format!("invalid {what}"),
        };
        records.push(RunRecord {
            dataset: field(0).to_string(),
            algorithm: field(1).parse()?,
            rate: parse_metric(field(2), line)?,
            seed: field(3).parse().map_err(|_| bad("seed"))?,
            rmse: parse_metric(field(4), line)?,
            mape: parse_metric(field(5), line)?,
            runtime_seconds: parse_metric(field(6), line)?,
            n_missing: field(7).parse().map_err(|_| bad("n_missing"))?,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Rmse,
    Mape,
    Runtime,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::Mape => "mape",
            Metric::Runtime => "runtime_seconds",
        }
    }

    pub fn of(self, r: &RunRecord) -> f64 {
        match self {
            Metric::Rmse => r.rmse,
            Metric::Mape => r.mape,
            Metric::Runtime => r.runtime_seconds,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

/// Strip plot: one point per record, algorithms along x, the metric on y,
/// colored by missingness rate. Also writes the plotted points to a sibling
/// `.csv` next to `path`. Records whose metric is not finite are skipped.
pub fn emit_strip_plot(records: &[RunRecord], metric: Metric, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let points: Vec<&RunRecord> = records.iter().filter(|r| metric.of(r).is_finite()).collect();
    if points.is_empty() {
        return Err(Error::NoPlottableRecords);
    }
    let mut categories: Vec<Algorithm> = Vec::new();
    for p in &points {
        if !categories.contains(&p.algorithm) {
            categories.push(p.algorithm);
        }
    }
    let rates: Vec<f64> = {
        let set: BTreeSet<u64> = points.iter().map(|p| p.rate.to_bits()).collect();
        let mut v: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (lo, hi) = points
        .iter()
        .map(|p| metric.of(p))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };

    let (width, height) = (160.0 + 120.0 * categories.len() as f64, 480.0);
    let (left, right, top, bottom) = (80.0, 120.0, 30.0, 60.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let band = plot_w / categories.len() as f64;
    let y_of = |v: f64| top + plot_h * (1.0 - (v - lo) / (hi - lo));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        top + plot_h
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = top + plot_h,
        x2 = left + plot_w
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y_of(v) + 4.0,
            format_tick(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">{}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        metric.label()
    );
    for (i, c) in categories.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            left + band * (i as f64 + 0.5),
            top + plot_h + 20.0,
            c.label()
        );
    }
    for (i, rate) in rates.iter().enumerate() {
        let y = top + 10.0 + 18.0 * i as f64;
        let x = left + plot_w + 20.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">rate {rate}</text>"#,
            y - 9.0,
            PALETTE[i % PALETTE.len()],
            x + 16.0,
            y
        );
    }

    let mut table = csv::Writer::from_path(path.with_extension("csv"))?;
    table.write_record(["dataset", "algorithm", "rate", "seed", "metric", "value"])?;
    for p in &points {
        let cat = categories.iter().position(|c| *c == p.algorithm).unwrap_or(0);
        let rate_idx = rates.iter().position(|r| *r == p.rate).unwrap_or(0);
        // Deterministic horizontal jitter so overlapping points stay visible.
        let jitter = ((p.seed.wrapping_mul(2_654_435_761) ^ (rate_idx as u64 * 40_503)) % 1000) as f64
            / 1000.0
            - 0.5;
        let value = metric.of(p);
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.75"><title>{} rate={} seed={}: {}</title></circle>"#,
            left + band * (cat as f64 + 0.5 + 0.6 * jitter),
            y_of(value),
            PALETTE[rate_idx % PALETTE.len()],
            p.algorithm,
            p.rate,
            p.seed,
            value
        );
        table.write_record([
            p.dataset.clone(),
            p.algorithm.label().to_string(),
            p.rate.to_string(),
            p.seed.to_string(),
            metric.label().to_string(),
            format_metric(value),
        ])?;
    }
    svg.push_str("</svg>\n");
    table.flush()?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn format_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e5) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}
