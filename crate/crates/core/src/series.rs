//! Equi-spaced univariate series and the structural primitives built on them:
//! the sample autocorrelation function and the lag-matrix recasting used by
//! lagged-regression imputation.

use crate::error::{Error, Result};

/// An equi-spaced sequence of optional real observations.
///
/// Index `i` sits at time `start + i / frequency`; no per-point timestamps are
/// stored. Missing observations are `None`, never a sentinel value.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<Option<f64>>,
    frequency: usize,
    start: f64,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input, a zero frequency and non-finite values.
    pub fn new(values: Vec<Option<f64>>, frequency: usize, start: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if frequency < 1 {
            return Err(Error::InvalidFrequency(frequency));
        }
        if let Some(i) = values
            .iter()
            .position(|v| v.is_some_and(|x| !x.is_finite()))
        {
            return Err(Error::NonFiniteValue(i));
        }
        Ok(Self {
            values,
            frequency,
            start,
        })
    }

    /// A complete series starting at time 1.
    pub fn from_complete(values: &[f64], frequency: usize) -> Result<Self> {
        Self::new(values.iter().copied().map(Some).collect(), frequency, 1.0)
    }

    /// Same frequency and start, new values.
    pub fn with_values(&self, values: Vec<Option<f64>>) -> Result<Self> {
        Self::new(values, self.frequency, self.start)
    }

    /// As [`with_values`](Self::with_values) for values already known to be finite.
    pub(crate) fn with_checked_values(&self, values: Vec<Option<f64>>) -> Self {
        debug_assert!(values.len() == self.values.len());
        Self {
            values,
            frequency: self.frequency,
            start: self.start,
        }
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frequency(&self) -> usize {
        self.frequency
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Time stamp of index `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        self.start + i as f64 / self.frequency as f64
    }

    /// Seasonal phase (position within the cycle) of index `i`.
    pub fn phase(&self, i: usize) -> usize {
        i % self.frequency
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn observed_count(&self) -> usize {
        self.len() - self.missing_count()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// 0-based positions of missing entries.
    pub fn missing_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.is_none().then_some(i))
            .collect()
    }

    /// Observed values in time order.
    pub fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    /// Mean of the observed values, `None` if nothing is observed.
    pub fn observed_mean(&self) -> Option<f64> {
        let (sum, count) = self
            .observed()
            .fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
        (count > 0).then(|| sum / count as f64)
    }

    /// The values as plain reals, failing if anything is missing.
    pub fn complete_values(&self) -> Result<Vec<f64>> {
        let missing = self.missing_count();
        if missing > 0 {
            return Err(Error::MissingValuesPresent { count: missing });
        }
        Ok(self.values.iter().map(|v| v.unwrap_or_default()).collect())
    }
}

/// Sample autocorrelation with the large-sample significance bound.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfResult {
    /// Coefficient at lag `k` is `coefficients[k]`; lag 0 is exactly 1.
    pub coefficients: Vec<f64>,
    pub n: usize,
    /// `1.96 / sqrt(n)`.
    pub significance_bound: f64,
}

impl AcfResult {
    /// Lags in `1..` whose coefficient magnitude exceeds the bound.
    pub fn significant_lags(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .filter_map(|(k, c)| (c.abs() > self.significance_bound).then_some(k))
            .collect()
    }
}

/// Biased sample ACF: both numerator and denominator divide by `n`, so the
/// factors cancel and the denominator is the full-series sum of squares.
pub fn acf(series: &TimeSeries, max_lag: usize) -> Result<AcfResult> {
    let y = series.complete_values()?;
    let n = y.len();
    if max_lag >= n {
        return Err(Error::LagOutOfRange { lag: max_lag, len: n });
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut coefficients = Vec::with_capacity(max_lag + 1);
    coefficients.push(1.0);
    for k in 1..=max_lag {
        let num: f64 = dev[..n - k].iter().zip(&dev[k..]).map(|(a, b)| a * b).sum();
        coefficients.push((num / denom).clamp(-1.0, 1.0));
    }
    Ok(AcfResult {
        coefficients,
        n,
        significance_bound: 1.96 / (n as f64).sqrt(),
    })
}

/// A univariate series recast as `lags + 1` aligned columns: `x` followed by
/// `lag_1 ..= lag_k`. Stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LagMatrix {
    lags: usize,
    rows: usize,
    columns: Vec<Vec<Option<f64>>>,
}

impl LagMatrix {
    pub fn lags(&self) -> usize {
        self.lags
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// Column 0 is `x`, column `j` is `lag_j`.
    pub fn column(&self, j: usize) -> &[Option<f64>] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<Option<f64>>] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        std::iter::once("x".to_string())
            .chain((1..=self.lags).map(|j| format!("lag_{j}")))
            .collect()
    }

    /// Source-series index of cell `(row, column)`.
    pub fn source_index(&self, row: usize, column: usize) -> usize {
        self.lags + row - column
    }

    pub fn get(&self, row: usize, column: usize) -> Option<f64> {
        self.columns[column][row]
    }
}

/// Builds the lag matrix: row `i` holds `x = y[lags + i]` and
/// `lag_j = y[lags + i - j]`. Missing values propagate unchanged.
pub fn create_lags(series: &TimeSeries, lags: usize) -> Result<LagMatrix> {
    let n = series.len();
    if lags < 1 || lags >= n {
        return Err(Error::LagOutOfRange { lag: lags, len: n });
    }
    let rows = n - lags;
    let values = series.values();
    let columns = (0..=lags)
        .map(|j| values[lags - j..lags - j + rows].to_vec())
        .collect();
    Ok(LagMatrix {
        lags,
        rows,
        columns,
    })
}
