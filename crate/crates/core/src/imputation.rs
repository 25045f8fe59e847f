//! Gap-filling algorithms that do not need a state-space model, plus the
//! [`Algorithm`] registry and [`impute`] dispatcher covering every method in
//! the crate.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::decomposition::{stl_periodic, StlOptions};
use crate::error::{Error, Result};
use crate::series::{create_lags, TimeSeries};
use crate::statespace;

/// Every imputation method the crate provides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Overall mean of the observed values.
    Mean,
    /// Mean of the observed values sharing the seasonal phase.
    SeasonalMean,
    Locf,
    Nocb,
    Linear,
    /// Linear interpolation of the STL-deseasonalized series.
    SeasonalInterp,
    /// Kalman smoothing under a fitted basic structural model.
    KalmanStruct,
    /// Kalman smoothing under an automatically selected ARI model.
    KalmanArima,
    /// Iterative least squares over the lag matrix.
    LaggedRegression,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::Mean,
        Algorithm::SeasonalMean,
        Algorithm::Locf,
        Algorithm::Nocb,
        Algorithm::Linear,
        Algorithm::SeasonalInterp,
        Algorithm::KalmanStruct,
        Algorithm::KalmanArima,
        Algorithm::LaggedRegression,
    ];

    /// The six methods in the default benchmark grid.
    pub const BENCHMARKED: [Algorithm; 6] = [
        Algorithm::Mean,
        Algorithm::Locf,
        Algorithm::Linear,
        Algorithm::SeasonalInterp,
        Algorithm::KalmanStruct,
        Algorithm::LaggedRegression,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Mean => "mean",
            Algorithm::SeasonalMean => "seasonal_mean",
            Algorithm::Locf => "locf",
            Algorithm::Nocb => "nocb",
            Algorithm::Linear => "linear",
            Algorithm::SeasonalInterp => "seasonal_interp",
            Algorithm::KalmanStruct => "kalman_struct",
            Algorithm::KalmanArima => "kalman_arima",
            Algorithm::LaggedRegression => "lagged_regression",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// A completed series and where it was filled.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationOutcome {
    pub series: TimeSeries,
    /// 0-based positions that were missing on input.
    pub filled_indices: Vec<usize>,
    pub algorithm: Algorithm,
}

impl ImputationOutcome {
    pub(crate) fn new(input: &TimeSeries, filled: Vec<f64>, algorithm: Algorithm) -> Result<Self> {
        let values = input
            .values()
            .iter()
            .zip(filled)
            .map(|(orig, new)| Some(orig.unwrap_or(new)))
            .collect();
        Ok(Self {
            series: input.with_values(values)?,
            filled_indices: input.missing_indices(),
            algorithm,
        })
    }

    /// Completed values as plain reals.
    pub fn values(&self) -> Vec<f64> {
        self.series.observed().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanMode {
    Overall,
    Seasonal,
}

/// Parameters for the algorithms that take any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImputeOptions {
    pub lags: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for ImputeOptions {
    fn default() -> Self {
        Self {
            lags: 10,
            max_iterations: 50,
            tolerance: 1e-6,
        }
    }
}

/// Runs `algorithm` on `series`.
pub fn impute(
    series: &TimeSeries,
    algorithm: Algorithm,
    options: &ImputeOptions,
) -> Result<ImputationOutcome> {
    match algorithm {
        Algorithm::Mean => impute_mean(series, MeanMode::Overall),
        Algorithm::SeasonalMean => impute_mean(series, MeanMode::Seasonal),
        Algorithm::Locf => impute_locf(series),
        Algorithm::Nocb => impute_nocb(series),
        Algorithm::Linear => impute_linear(series),
        Algorithm::SeasonalInterp => impute_seasonal_interp(series),
        Algorithm::KalmanStruct => statespace::impute_kalman_struct(series),
        Algorithm::KalmanArima => statespace::impute_kalman_arima(series),
        Algorithm::LaggedRegression => impute_lagged_regression(
            series,
            options.lags,
            options.max_iterations,
            options.tolerance,
        ),
    }
}

fn require_observed(series: &TimeSeries) -> Result<f64> {
    series.observed_mean().ok_or(Error::AllMissing)
}

pub fn impute_mean(series: &TimeSeries, mode: MeanMode) -> Result<ImputationOutcome> {
    let overall = require_observed(series)?;
    match mode {
        MeanMode::Overall if !overall.is_finite() => {
            ImputationOutcome::new(series, vec![overall; series.len()], Algorithm::Mean)
        }
        MeanMode::Overall => {
            // One pass; a finite fill value needs no re-validation.
            let mut filled_indices = Vec::new();
            let values = series
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if v.is_none() {
                        filled_indices.push(i);
                    }
                    Some(v.unwrap_or(overall))
                })
                .collect();
            Ok(ImputationOutcome {
                series: series.with_checked_values(values),
                filled_indices,
                algorithm: Algorithm::Mean,
            })
        }
        MeanMode::Seasonal => {
            let f = series.frequency();
            let mut sums = vec![0.0; f];
            let mut counts = vec![0usize; f];
            for (i, v) in series.values().iter().enumerate() {
                if let Some(v) = v {
                    sums[i % f] += v;
                    counts[i % f] += 1;
                }
            }
            if let Some(phase) = counts.iter().position(|&c| c == 0) {
                return Err(Error::EmptyPhase { phase });
            }
            let filled = (0..series.len())
                .map(|i| sums[i % f] / counts[i % f] as f64)
                .collect();
            ImputationOutcome::new(series, filled, Algorithm::SeasonalMean)
        }
    }
}

/// Last observation carried forward. A missing first value is first set to
/// the mean of the observed values and then carried like any other.
pub fn impute_locf(series: &TimeSeries) -> Result<ImputationOutcome> {
    let mean = require_observed(series)?;
    let mut last = series.values()[0].unwrap_or(mean);
    let filled = series
        .values()
        .iter()
        .map(|v| {
            if let Some(v) = v {
                last = *v;
            }
            last
        })
        .collect();
    ImputationOutcome::new(series, filled, Algorithm::Locf)
}

/// Next observation carried backward, with a mean patch for a missing last value.
pub fn impute_nocb(series: &TimeSeries) -> Result<ImputationOutcome> {
    let mean = require_observed(series)?;
    let values = series.values();
    let mut next = values[values.len() - 1].unwrap_or(mean);
    let mut filled: Vec<f64> = values
        .iter()
        .rev()
        .map(|v| {
            if let Some(v) = v {
                next = *v;
            }
            next
        })
        .collect();
    filled.reverse();
    ImputationOutcome::new(series, filled, Algorithm::Nocb)
}

/// Straight-line interpolation over index gaps, nearest-value extension at
/// the ends. `None` when nothing is observed.
pub(crate) fn linear_fill(values: &[Option<f64>]) -> Option<Vec<f64>> {
    let observed: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    let (&(first_i, first_v), &(last_i, last_v)) = (observed.first()?, observed.last()?);
    let mut out = vec![0.0; values.len()];
    out[..=first_i].fill(first_v);
    out[last_i..].fill(last_v);
    for pair in observed.windows(2) {
        let ((l, yl), (r, yr)) = (pair[0], pair[1]);
        out[l] = yl;
        let width = (r - l) as f64;
        for (i, slot) in out.iter_mut().enumerate().take(r).skip(l + 1) {
            *slot = yl + (yr - yl) * (i - l) as f64 / width;
        }
    }
    Some(out)
}

pub fn impute_linear(series: &TimeSeries) -> Result<ImputationOutcome> {
    let filled = linear_fill(series.values()).ok_or(Error::AllMissing)?;
    ImputationOutcome::new(series, filled, Algorithm::Linear)
}

/// Seasonally adjusted interpolation.
///
/// Non-seasonal series (`f = 1`) get plain linear interpolation. Otherwise
/// the gaps are pre-filled linearly, a periodic STL of the pre-filled series
/// supplies the seasonal component, the seasonal component is removed from
/// the observed values, the remainder is interpolated linearly and the
/// seasonal component is added back at the gaps. The completed series then
/// serves as the next pre-fill, until the filled values settle.
pub fn impute_seasonal_interp(series: &TimeSeries) -> Result<ImputationOutcome> {
    if series.frequency() == 1 {
        let mut out = impute_linear(series)?;
        out.algorithm = Algorithm::SeasonalInterp;
        return Ok(out);
    }
    if series.observed_count() < 2 {
        return Err(Error::AllMissing);
    }
    let gaps = series.missing_indices();
    let mut filled = linear_fill(series.values()).ok_or(Error::AllMissing)?;
    if gaps.is_empty() {
        return ImputationOutcome::new(series, filled, Algorithm::SeasonalInterp);
    }
    let scale = series.observed().map(f64::abs).fold(0.0, f64::max).max(1.0);
    for _ in 0..SEASONAL_INTERP_PASSES {
        let next = seasonal_interp_pass(series, &filled)?;
        let change = gaps
            .iter()
            .map(|&i| (next[i] - filled[i]).abs())
            .fold(0.0, f64::max);
        filled = next;
        if change <= 1e-10 * scale {
            break;
        }
    }
    ImputationOutcome::new(series, filled, Algorithm::SeasonalInterp)
}

const SEASONAL_INTERP_PASSES: usize = 20;

fn seasonal_interp_pass(series: &TimeSeries, prefilled: &[f64]) -> Result<Vec<f64>> {
    let decomposition = stl_periodic(
        &TimeSeries::new(
            prefilled.iter().copied().map(Some).collect(),
            series.frequency(),
            series.start(),
        )?,
        StlOptions::default(),
    )?;
    let seasonal = decomposition.seasonal;
    let adjusted: Vec<Option<f64>> = series
        .values()
        .iter()
        .zip(&seasonal)
        .map(|(v, s)| v.map(|v| v - s))
        .collect();
    let interpolated = linear_fill(&adjusted).ok_or(Error::AllMissing)?;
    Ok(series
        .values()
        .iter()
        .zip(interpolated.iter().zip(&seasonal))
        .map(|(v, (a, s))| v.unwrap_or(a + s))
        .collect())
}

/// Ridge added to the standardized normal equations of every column fit.
const RIDGE: f64 = 1e-8;

/// Iterative regression imputation on the lag matrix.
///
/// Missing cells start at their column means. Each sweep regresses every
/// column that has missing cells on all other columns (with intercept),
/// using only the rows where that column was observed, and overwrites the
/// missing cells with the predictions. Sweeps stop once the largest cell
/// change drops below `tolerance` or after `max_iterations`. A time index
/// appears in up to `lags + 1` cells; its imputed value is the mean of them.
pub fn impute_lagged_regression(
    series: &TimeSeries,
    lags: usize,
    max_iterations: usize,
    tolerance: f64,
) -> Result<ImputationOutcome> {
    let n = series.len();
    if lags < 1 || n <= lags + 2 {
        return Err(Error::SeriesTooShort {
            len: n,
            required: lags.max(1) + 3,
        });
    }
    let overall_mean = require_observed(series)?;
    if series.is_complete() {
        return ImputationOutcome::new(series, vec![0.0; n], Algorithm::LaggedRegression);
    }

    let matrix = create_lags(series, lags)?;
    let rows = matrix.rows();
    let n_cols = matrix.n_columns();
    let observed: Vec<Vec<bool>> = matrix
        .columns()
        .iter()
        .map(|c| c.iter().map(Option::is_some).collect())
        .collect();
    let mut work: Vec<Vec<f64>> = matrix
        .columns()
        .iter()
        .map(|column| {
            let (s, c) = column.iter().flatten().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
            let fill = if c > 0 { s / c as f64 } else { overall_mean };
            column.iter().map(|v| v.unwrap_or(fill)).collect()
        })
        .collect();

    let targets: Vec<usize> = (0..n_cols)
        .filter(|&c| observed[c].iter().any(|o| !o) && observed[c].iter().any(|&o| o))
        .collect();
    for _ in 0..max_iterations {
        let mut max_change = 0.0f64;
        for &target in &targets {
            let predictors: Vec<usize> = (0..n_cols).filter(|&c| c != target).collect();
            let fit_rows: Vec<usize> = (0..rows).filter(|&r| observed[target][r]).collect();
            let Some(model) = fit_column(&work, target, &predictors, &fit_rows) else {
                continue;
            };
            for r in (0..rows).filter(|&r| !observed[target][r]) {
                let prediction = model.predict(&work, &predictors, r);
                max_change = max_change.max((prediction - work[target][r]).abs());
                work[target][r] = prediction;
            }
        }
        if max_change < tolerance {
            break;
        }
    }

    let mut filled = vec![0.0; n];
    for t in series.missing_indices() {
        let (sum, count) = (0..n_cols)
            .filter_map(|j| {
                let row = (t + j).checked_sub(lags)?;
                (row < rows).then(|| work[j][row])
            })
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        filled[t] = sum / count as f64;
    }
    ImputationOutcome::new(series, filled, Algorithm::LaggedRegression)
}

struct ColumnModel {
    intercept: f64,
    centers: Vec<f64>,
    slopes: Vec<f64>,
}

impl ColumnModel {
    fn predict(&self, work: &[Vec<f64>], predictors: &[usize], row: usize) -> f64 {
        self.intercept
            + predictors
                .iter()
                .zip(self.centers.iter().zip(&self.slopes))
                .map(|(&c, (m, b))| b * (work[c][row] - m))
                .sum::<f64>()
    }
}

/// Least squares of `work[target]` on `work[predictors]` over `rows`, solved
/// on centered, unit-scaled predictors with a small ridge term.
fn fit_column(
    work: &[Vec<f64>],
    target: usize,
    predictors: &[usize],
    rows: &[usize],
) -> Option<ColumnModel> {
    if rows.is_empty() {
        return None;
    }
    let count = rows.len() as f64;
    let p = predictors.len();
    let y_mean = rows.iter().map(|&r| work[target][r]).sum::<f64>() / count;
    let centers: Vec<f64> = predictors
        .iter()
        .map(|&c| rows.iter().map(|&r| work[c][r]).sum::<f64>() / count)
        .collect();
    let scales: Vec<f64> = predictors
        .iter()
        .zip(&centers)
        .map(|(&c, m)| {
            let ss: f64 = rows.iter().map(|&r| (work[c][r] - m).powi(2)).sum();
            let sd = (ss / count).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();

    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut z = vec![0.0; p];
    for &r in rows {
        for (k, &c) in predictors.iter().enumerate() {
            z[k] = (work[c][r] - centers[k]) / scales[k];
        }
        let dy = work[target][r] - y_mean;
        for a in 0..p {
            rhs[a] += z[a] * dy;
            for b in a..p {
                gram[(a, b)] += z[a] * z[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let mut ridge = RIDGE;
    let beta = loop {
        let mut system = gram.clone();
        for a in 0..p {
            system[(a, a)] += ridge;
        }
        if let Some(chol) = system.cholesky() {
            break chol.solve(&rhs);
        }
        ridge *= 10.0;
        if ridge > 1e6 {
            return None;
        }
    };
    Some(ColumnModel {
        intercept: y_mean,
        slopes: beta.iter().zip(&scales).map(|(b, s)| b / s).collect(),
        centers,
    })
}
