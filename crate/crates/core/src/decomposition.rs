//! Additive trend + seasonal + remainder decompositions.
//!
//! Two methods are provided: the classical centered-moving-average
//! decomposition and a periodic STL built on a tricube-weighted local
//! regression smoother. With a periodic seasonal window the cycle-subseries
//! smoother reduces to per-phase means, so STL here is the inner loop only
//! (no low-pass stage, no robustness iterations).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionMethod {
    Classical,
    StlPeriodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// `None` where the method leaves the trend undefined (classical edges).
    pub trend: Vec<Option<f64>>,
    /// Periodic with period `frequency`, zero sum over one period.
    pub seasonal: Vec<f64>,
    pub remainder: Vec<Option<f64>>,
    pub method: DecompositionMethod,
    pub frequency: usize,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.seasonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seasonal.is_empty()
    }

    /// The `frequency` distinct seasonal effects, indexed by phase.
    pub fn seasonal_pattern(&self) -> &[f64] {
        &self.seasonal[..self.frequency.min(self.seasonal.len())]
    }
}

fn check_seasonal_input(series: &TimeSeries) -> Result<Vec<f64>> {
    let y = series.complete_values()?;
    let f = series.frequency();
    if f < 2 {
        return Err(Error::FrequencyTooLow(f));
    }
    if y.len() < 2 * f {
        return Err(Error::SeriesTooShort {
            len: y.len(),
            required: 2 * f,
        });
    }
    Ok(y)
}

/// Per-phase means of `detrended` (ignoring `None`), shifted to sum to zero
/// over one period and tiled to length `n`.
fn periodic_seasonal(detrended: &[Option<f64>], f: usize) -> Vec<f64> {
    let mut sums = vec![0.0; f];
    let mut counts = vec![0usize; f];
    for (i, d) in detrended.iter().enumerate() {
        if let Some(d) = d {
            sums[i % f] += d;
            counts[i % f] += 1;
        }
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let center = means.iter().sum::<f64>() / f as f64;
    let pattern: Vec<f64> = means.iter().map(|m| m - center).collect();
    (0..detrended.len()).map(|i| pattern[i % f]).collect()
}

/// Centered moving average of width `f`; the 2×f average for even `f`.
/// Undefined for `f / 2` points at each edge.
fn centered_moving_average(y: &[f64], f: usize) -> Vec<Option<f64>> {
    let n = y.len();
    let half = f / 2;
    let mut trend = vec![None; n];
    for t in half..n.saturating_sub(half) {
        let value = if f.is_multiple_of(2) {
            let inner: f64 = y[t + 1 - half..t + half].iter().sum();
            (0.5 * y[t - half] + inner + 0.5 * y[t + half]) / f as f64
        } else {
            y[t - half..=t + half].iter().sum::<f64>() / f as f64
        };
        trend[t] = Some(value);
    }
    trend
}

/// Classical additive decomposition by moving averages.
pub fn classical_decompose(series: &TimeSeries) -> Result<Decomposition> {
    let y = check_seasonal_input(series)?;
    let f = series.frequency();
    let trend = centered_moving_average(&y, f);
    let detrended: Vec<Option<f64>> = y
        .iter()
        .zip(&trend)
        .map(|(v, t)| t.map(|t| v - t))
        .collect();
    let seasonal = periodic_seasonal(&detrended, f);
    let remainder = y
        .iter()
        .zip(&trend)
        .zip(&seasonal)
        .map(|((v, t), s)| t.map(|t| v - t - s))
        .collect();
    Ok(Decomposition {
        trend,
        seasonal,
        remainder,
        method: DecompositionMethod::Classical,
        frequency: f,
    })
}

/// Local regression (loess) of `ys` on `xs`.
///
/// Each fitted value is the intercept of a weighted polynomial fit of degree
/// `degree` over the `ceil(span * n)` nearest neighbors, with tricube weights
/// `(1 - (d / d_max)^3)^3` where `d_max` is the distance to the farthest
/// neighbor. If the weighted design at a point is rank deficient (too few
/// points with positive weight) the local degree is lowered for that point.
pub fn loess_smooth(xs: &[f64], ys: &[f64], span: f64, degree: usize) -> Result<Vec<f64>> {
    if !(1..=2).contains(&degree) {
        return Err(Error::InvalidDegree(degree));
    }
    let n = xs.len();
    if ys.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: ys.len(),
        });
    }
    if let Some(i) = xs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonIncreasingX(i + 1));
    }
    let q = if span.is_finite() && span > 0.0 {
        ((span * n as f64).ceil() as usize).min(n)
    } else {
        0
    };
    if q < degree + 2 {
        return Err(Error::NeighborhoodTooSmall { points: q, degree });
    }

    let mut fitted = Vec::with_capacity(n);
    let mut lo = 0usize;
    for i in 0..n {
        let x0 = xs[i];
        while lo + q < n && xs[lo + q] - x0 < x0 - xs[lo] {
            lo += 1;
        }
        let window = lo..lo + q;
        let d_max = (x0 - xs[lo]).max(xs[lo + q - 1] - x0);
        fitted.push(local_fit(&xs[window.clone()], &ys[window], x0, d_max, degree));
    }
    Ok(fitted)
}

fn local_fit(xs: &[f64], ys: &[f64], x0: f64, d_max: f64, degree: usize) -> f64 {
    // Normal equations in the scaled coordinate u = (x - x0) / d_max.
    let mut moments = [0.0f64; 5];
    let mut rhs = [0.0f64; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let u = (x - x0) / d_max;
        let r = u.abs();
        if r >= 1.0 {
            continue;
        }
        let w = (1.0 - r * r * r).powi(3);
        let mut p = w;
        for (k, m) in moments.iter_mut().enumerate() {
            *m += p;
            if k < 3 {
                rhs[k] += p * y;
            }
            p *= u;
        }
    }
    for deg in (0..=degree).rev() {
        if let Some(beta0) = solve_moment_system(&moments, &rhs, deg) {
            return beta0;
        }
    }
    // No point carries weight: fall back to the nearest observation.
    xs.iter()
        .zip(ys)
        .min_by(|a, b| (a.0 - x0).abs().total_cmp(&(b.0 - x0).abs()))
        .map_or(f64::NAN, |(_, y)| *y)
}

/// Solves the Hankel system `sum_k moments[j+k] beta_k = rhs[j]` of size
/// `deg + 1` by partial-pivot elimination; `None` if numerically singular.
fn solve_moment_system(moments: &[f64; 5], rhs: &[f64; 3], deg: usize) -> Option<f64> {
    let size = deg + 1;
    let mut a = [[0.0f64; 4]; 3];
    for (j, row) in a.iter_mut().enumerate().take(size) {
        row[..size].copy_from_slice(&moments[j..j + size]);
        row[size] = rhs[j];
    }
    let scale = moments[0].abs();
    if scale <= 0.0 {
        return None;
    }
    for col in 0..size {
        let pivot = (col..size).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() <= 1e-10 * scale {
            return None;
        }
        a.swap(col, pivot);
        let pivot_row = a[col];
        for row in a.iter_mut().take(size).skip(col + 1) {
            let factor = row[col] / pivot_row[col];
            for (x, p) in row[col..=size].iter_mut().zip(&pivot_row[col..=size]) {
                *x -= factor * p;
            }
        }
    }
    let mut beta = [0.0f64; 3];
    for r in (0..size).rev() {
        let tail: f64 = (r + 1..size).map(|k| a[r][k] * beta[k]).sum();
        beta[r] = (a[r][size] - tail) / a[r][r];
    }
    Some(beta[0])
}

/// Settings for [`stl_periodic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StlOptions {
    /// Trend smoother span; `None` uses [`default_trend_span`].
    pub trend_span: Option<f64>,
    pub inner_iterations: usize,
}

impl Default for StlOptions {
    fn default() -> Self {
        Self {
            trend_span: None,
            inner_iterations: 2,
        }
    }
}

/// Heuristic trend span: about one and a half seasonal cycles, never fewer
/// than ten points, never more than the whole series.
pub fn default_trend_span(n: usize, frequency: usize) -> f64 {
    let n = n as f64;
    (1.5 * frequency as f64 / n).max(10.0 / n).min(1.0)
}

/// Periodic STL: alternates per-phase seasonal means of the detrended series
/// with a degree-1 loess trend of the deseasonalized series.
pub fn stl_periodic(series: &TimeSeries, options: StlOptions) -> Result<Decomposition> {
    let y = check_seasonal_input(series)?;
    let f = series.frequency();
    let n = y.len();
    let span = options
        .trend_span
        .unwrap_or_else(|| default_trend_span(n, f));
    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();

    let mut trend = vec![0.0; n];
    let mut seasonal = vec![0.0; n];
    for _ in 0..options.inner_iterations.max(1) {
        let detrended: Vec<Option<f64>> = y.iter().zip(&trend).map(|(v, t)| Some(v - t)).collect();
        seasonal = periodic_seasonal(&detrended, f);
        let adjusted: Vec<f64> = y.iter().zip(&seasonal).map(|(v, s)| v - s).collect();
        trend = loess_smooth(&xs, &adjusted, span, 1)?;
    }
    let remainder = y
        .iter()
        .zip(&trend)
        .zip(&seasonal)
        .map(|((v, t), s)| Some(v - t - s))
        .collect();
    Ok(Decomposition {
        trend: trend.into_iter().map(Some).collect(),
        seasonal,
        remainder,
        method: DecompositionMethod::StlPeriodic,
        frequency: f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rms(v: impl Iterator<Item = f64>) -> f64 {
        let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x * x, c + 1));
        (s / c as f64).sqrt()
    }

    fn assert_additive(series: &TimeSeries, d: &Decomposition) {
        for (i, v) in series.values().iter().enumerate() {
            if let (Some(t), Some(r)) = (d.trend[i], d.remainder[i]) {
                assert!((t + d.seasonal[i] + r - v.unwrap()).abs() < 1e-9);
            }
        }
        let f = d.frequency;
        assert!(d.seasonal_pattern().iter().sum::<f64>().abs() < 1e-9);
        for i in 0..d.len() - f {
            assert_eq!(d.seasonal[i], d.seasonal[i + f]);
        }
    }

    #[test]
    fn classical_constant_series() {
        let s = TimeSeries::from_complete(&[7.5; 16], 4).unwrap();
        let d = classical_decompose(&s).unwrap();
        assert_additive(&s, &d);
        assert_eq!(d.trend.iter().filter(|t| t.is_none()).count(), 4);
        for i in 2..14 {
            assert!((d.trend[i].unwrap() - 7.5).abs() < 1e-12);
            assert!(d.remainder[i].unwrap().abs() < 1e-12);
        }
        assert!(d.seasonal.iter().all(|s| s.abs() < 1e-12));
    }

    #[test]
    fn classical_ramp_has_no_seasonality() {
        let v: Vec<f64> = (0..40).map(|t| t as f64).collect();
        let s = TimeSeries::from_complete(&v, 4).unwrap();
        let d = classical_decompose(&s).unwrap();
        assert_additive(&s, &d);
        assert!(d.seasonal.iter().all(|x| x.abs() < 1e-9));
        assert!(d.remainder.iter().flatten().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn classical_odd_frequency_edges() {
        let v: Vec<f64> = (0..15).map(|t| (t % 5) as f64 + 0.1 * t as f64).collect();
        let s = TimeSeries::from_complete(&v, 5).unwrap();
        let d = classical_decompose(&s).unwrap();
        assert_additive(&s, &d);
        assert!(d.trend[..2].iter().all(Option::is_none));
        assert!(d.trend[13..].iter().all(Option::is_none));
        assert!(d.trend[2..13].iter().all(Option::is_some));
    }

    #[test]
    fn classical_recovers_sinusoid() {
        let v: Vec<f64> = (0..144)
            .map(|t| 0.3 * t as f64 + (2.0 * PI * t as f64 / 12.0).sin())
            .collect();
        let s = TimeSeries::from_complete(&v, 12).unwrap();
        let d = classical_decompose(&s).unwrap();
        assert_additive(&s, &d);
        for t in 0..144 {
            let truth = (2.0 * PI * t as f64 / 12.0).sin();
            assert!((d.seasonal[t] - truth).abs() < 0.05);
        }
    }

    #[test]
    fn decomposition_preconditions() {
        let short = TimeSeries::from_complete(&[1.0; 7], 4).unwrap();
        assert!(matches!(
            classical_decompose(&short),
            Err(Error::SeriesTooShort { len: 7, required: 8 })
        ));
        let f1 = TimeSeries::from_complete(&[1.0; 10], 1).unwrap();
        assert!(matches!(
            stl_periodic(&f1, StlOptions::default()),
            Err(Error::FrequencyTooLow(1))
        ));
        let gap = TimeSeries::new(vec![Some(1.0), None, Some(1.0), Some(1.0)], 2, 1.0).unwrap();
        assert!(matches!(
            classical_decompose(&gap),
            Err(Error::MissingValuesPresent { .. })
        ));
    }

    #[test]
    fn loess_reproduces_polynomials() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.37 + (i * i) as f64 * 0.01).collect();
        let line: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        for span in [0.1, 0.3, 0.75, 1.0] {
            let fit = loess_smooth(&xs, &line, span, 1).unwrap();
            for (a, b) in fit.iter().zip(&line) {
                assert!((a - b).abs() < 1e-9, "span {span}: {a} vs {b}");
            }
        }
        let quad: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let fit = loess_smooth(&xs, &quad, 0.5, 2).unwrap();
        for (a, b) in fit.iter().zip(&quad) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn loess_errors() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [1.0; 5];
        assert!(matches!(
            loess_smooth(&xs, &ys, 0.2, 1),
            Err(Error::NeighborhoodTooSmall { .. })
        ));
        assert!(matches!(
            loess_smooth(&[0.0, 1.0, 1.0, 2.0], &[1.0; 4], 1.0, 1),
            Err(Error::NonIncreasingX(2))
        ));
        assert!(matches!(
            loess_smooth(&xs, &ys, 1.0, 3),
            Err(Error::InvalidDegree(3))
        ));
    }

    #[test]
    fn loess_minimal_neighborhood_degrades_gracefully() {
        // Three equally spaced neighbors leave only the center with weight.
        let xs: Vec<f64> = (0..9).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let fit = loess_smooth(&xs, &ys, 3.0 / 9.0, 1).unwrap();
        for (a, b) in fit.iter().zip(&ys) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn stl_constant_series() {
        let s = TimeSeries::from_complete(&[4.0; 48], 12).unwrap();
        let d = stl_periodic(&s, StlOptions::default()).unwrap();
        assert_additive(&s, &d);
        assert!(d.trend.iter().all(|t| (t.unwrap() - 4.0).abs() < 1e-12));
        assert!(d.seasonal.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn stl_pure_sinusoid() {
        let v: Vec<f64> = (0..144).map(|t| (2.0 * PI * t as f64 / 12.0).sin()).collect();
        let s = TimeSeries::from_complete(&v, 12).unwrap();
        let d = stl_periodic(&s, StlOptions::default()).unwrap();
        assert_additive(&s, &d);
        let series_rms = rms(v.iter().copied());
        let rem_rms = rms(d.remainder.iter().flatten().copied());
        assert!(rem_rms < 0.01 * series_rms);
    }

    #[test]
    fn default_span_bounds() {
        assert!((default_trend_span(144, 12) - 0.125).abs() < 1e-15);
        assert!((default_trend_span(10_000, 2) - 0.001).abs() < 1e-15);
        assert_eq!(default_trend_span(8, 4), 1.0);
    }
}
