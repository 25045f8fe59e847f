//! Basic structural model: local linear trend plus seasonal dummies.
//!
//! ```text
//! y_t     = mu_t + s_t + eps_t
//! mu_t+1  = mu_t + nu_t + xi_t
//! nu_t+1  = nu_t + zeta_t
//! s_t+1   = -(s_t + s_t-1 + ... + s_t-f+2) + omega_t
//! ```
//!
//! For `f = 1` the seasonal block is dropped. The variances of
//! `xi, zeta, omega, eps` are estimated by maximizing the prediction-error
//! likelihood over their logarithms with Nelder–Mead.

use nalgebra::{DMatrix, DVector};

use super::{kalman_smooth, log_likelihood, StateSpaceModel};
use crate::error::{Error, Result};
use crate::imputation::{Algorithm, ImputationOutcome};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::series::TimeSeries;

/// Initial state covariance is `DIFFUSE_SCALE * var(y) * I`.
pub const DIFFUSE_SCALE: f64 = 1e7;

/// Variances are kept within `[MIN, MAX] * var(y)` during the search.
const MIN_RELATIVE_VARIANCE: f64 = 1e-8;
const MAX_RELATIVE_VARIANCE: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsmVariances {
    pub level: f64,
    pub slope: f64,
    /// Zero for non-seasonal series.
    pub seasonal: f64,
    pub observation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralFit {
    pub model: StateSpaceModel,
    pub variances: BsmVariances,
    /// Log-likelihood at the optimum, excluding the burn-in terms.
    pub log_likelihood: f64,
    pub evaluations: usize,
}

/// State dimension: level, slope and `f - 1` seasonal dummies (2 if `f = 1`).
fn state_dim(frequency: usize) -> usize {
    if frequency >= 2 {
        frequency + 1
    } else {
        2
    }
}

/// Builds the structural model for `frequency` with the given variances.
pub fn bsm_model(
    frequency: usize,
    variances: &BsmVariances,
    initial_level: f64,
    initial_variance: f64,
) -> StateSpaceModel {
    let m = state_dim(frequency);
    let mut transition = DMatrix::zeros(m, m);
    transition[(0, 0)] = 1.0;
    transition[(0, 1)] = 1.0;
    transition[(1, 1)] = 1.0;
    let mut observation = DVector::zeros(m);
    observation[0] = 1.0;
    let mut state_covariance = DMatrix::zeros(m, m);
    state_covariance[(0, 0)] = variances.level;
    state_covariance[(1, 1)] = variances.slope;
    if frequency >= 2 {
        for j in 2..m {
            transition[(2, j)] = -1.0;
        }
        for j in 3..m {
            transition[(j, j - 1)] = 1.0;
        }
        observation[2] = 1.0;
        state_covariance[(2, 2)] = variances.seasonal;
    }
    let mut initial_state = DVector::zeros(m);
    initial_state[0] = initial_level;
    StateSpaceModel {
        transition,
        observation,
        state_covariance,
        observation_variance: variances.observation,
        initial_state,
        initial_covariance: DMatrix::identity(m, m) * initial_variance,
    }
}

fn check_preconditions(series: &TimeSeries) -> Result<()> {
    let n = series.len();
    let f = series.frequency();
    if series.observed_count() == 0 {
        return Err(Error::AllMissing);
    }
    if f >= 2 {
        if n < 2 * f {
            return Err(Error::SeriesTooShort { len: n, required: 2 * f });
        }
        let mut seen = vec![false; f];
        for (i, v) in series.values().iter().enumerate() {
            if v.is_some() {
                seen[i % f] = true;
            }
        }
        if let Some(phase) = seen.iter().position(|s| !s) {
            return Err(Error::EmptyPhase { phase });
        }
    } else if n < 4 {
        return Err(Error::SeriesTooShort { len: n, required: 4 });
    }
    Ok(())
}

fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// Maximum-likelihood fit of the basic structural model.
///
/// The initial state is `(y*, 0, ..., 0)` with `y*` the first observed value
/// and covariance `1e7 * var(y) * I`; the first `m` likelihood terms are
/// excluded as burn-in to approximate the diffuse likelihood. The search
/// starts at `var(y) * (0.1, 0.01, 0.1, 0.5)` for (level, slope, seasonal,
/// observation), with at most 500 objective evaluations.
pub fn fit_bsm(series: &TimeSeries) -> Result<StructuralFit> {
    check_preconditions(series)?;
    let f = series.frequency();
    let seasonal = f >= 2;
    let m = state_dim(f);
    let observed: Vec<f64> = series.observed().collect();
    let first = observed[0];
    let scale = sample_variance(&observed);
    let obs = series.values();

    if !(scale > 0.0) {
        // Constant data: the noise-free model with an exact prior fits perfectly.
        let variances = BsmVariances {
            level: 0.0,
            slope: 0.0,
            seasonal: 0.0,
            observation: 0.0,
        };
        let model = bsm_model(f, &variances, first, 0.0);
        let (ll, _) = log_likelihood(&model, obs, m)?;
        return Ok(StructuralFit {
            model,
            variances,
            log_likelihood: ll,
            evaluations: 1,
        });
    }

    let initial_variance = DIFFUSE_SCALE * scale;
    let (lo, hi) = (
        (MIN_RELATIVE_VARIANCE * scale).ln(),
        (MAX_RELATIVE_VARIANCE * scale).ln(),
    );
    let unpack = |theta: &[f64]| -> BsmVariances {
        let v = |x: f64| x.clamp(lo, hi).exp();
        if seasonal {
            BsmVariances {
                level: v(theta[0]),
                slope: v(theta[1]),
                seasonal: v(theta[2]),
                observation: v(theta[3]),
            }
        } else {
            BsmVariances {
                level: v(theta[0]),
                slope: v(theta[1]),
                seasonal: 0.0,
                observation: v(theta[2]),
            }
        }
    };
    let start: Vec<f64> = if seasonal {
        vec![0.1, 0.01, 0.1, 0.5]
    } else {
        vec![0.1, 0.01, 0.5]
    }
    .into_iter()
    .map(|r: f64| (r * scale).ln())
    .collect();

    // Outside the bounds the clamped likelihood is flat; the penalty slopes
    // back toward the boundary so the simplex cannot stall out there.
    let objective = |theta: &[f64]| -> f64 {
        let model = bsm_model(f, &unpack(theta), first, initial_variance);
        let penalty: f64 = theta
            .iter()
            .map(|&x| ((lo - x).max(0.0) + (x - hi).max(0.0)).powi(2))
            .sum();
        match log_likelihood(&model, obs, m) {
            Ok((ll, _)) if ll.is_finite() => penalty - ll,
            _ => f64::INFINITY,
        }
    };
    let best = nelder_mead(objective, &start, &NelderMeadOptions::default());
    if !best.value.is_finite() {
        return Err(Error::OptimizationFailed(
            "log-likelihood is not finite anywhere the simplex probed".into(),
        ));
    }
    let variances = unpack(&best.x);
    Ok(StructuralFit {
        model: bsm_model(f, &variances, first, initial_variance),
        variances,
        log_likelihood: log_likelihood(&bsm_model(f, &variances, first, initial_variance), obs, m)?.0,
        evaluations: best.evaluations,
    })
}

/// Fills gaps with the smoothed signal of a fitted structural model.
///
/// A missing first value needs no patching: the filter starts from the first
/// observed value under the diffuse prior and predicts through leading gaps.
pub fn impute_kalman_struct(series: &TimeSeries) -> Result<ImputationOutcome> {
    if series.observed_count() == 0 {
        return Err(Error::AllMissing);
    }
    if series.is_complete() {
        return ImputationOutcome::new(series, vec![0.0; series.len()], Algorithm::KalmanStruct);
    }
    let fit = fit_bsm(series)?;
    let out = kalman_smooth(&fit.model, series.values())?;
    let smoothed = out.smoothed.expect("smoother output");
    let filled: Vec<f64> = smoothed.means.iter().map(|state| fit.model.observe(state)).collect();
    ImputationOutcome::new(series, filled, Algorithm::KalmanStruct)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seasonal_transition_structure() {
        let v = BsmVariances {
            level: 1.0,
            slope: 2.0,
            seasonal: 3.0,
            observation: 4.0,
        };
        let model = bsm_model(4, &v, 10.0, 5.0);
        assert!(model.validate().is_ok());
        assert_eq!(model.state_dim(), 5);
        let expected = DMatrix::from_row_slice(
            5,
            5,
            &[
                1.0, 1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, -1.0, -1.0, -1.0, //
                0.0, 0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, 0.0,
            ],
        );
        assert_eq!(model.transition, expected);
        assert_eq!(model.observation.as_slice(), &[1.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(model.state_covariance[(2, 2)], 3.0);
        assert_eq!(model.initial_state[0], 10.0);

        let trend = bsm_model(1, &v, 0.0, 1.0);
        assert_eq!(trend.state_dim(), 2);
    }

    #[test]
    fn preconditions() {
        let short = TimeSeries::from_complete(&[1.0, 2.0, 3.0], 1).unwrap();
        assert!(matches!(fit_bsm(&short), Err(Error::SeriesTooShort { .. })));
        let mut v = vec![Some(1.0); 12];
        v[1] = None;
        v[5] = None;
        v[9] = None;
        let empty_phase = TimeSeries::new(v, 4, 1.0).unwrap();
        assert!(matches!(
            fit_bsm(&empty_phase),
            Err(Error::EmptyPhase { phase: 1 })
        ));
    }

    #[test]
    fn constant_series_fits_noise_free() {
        let s = TimeSeries::from_complete(&[6.0; 24], 4).unwrap();
        let fit = fit_bsm(&s).unwrap();
        let v = fit.variances;
        let bound = 1e-6 * 36.0;
        assert!(v.level <= bound && v.slope <= bound && v.seasonal <= bound && v.observation <= bound);
    }

    #[test]
    fn constant_series_gaps_filled() {
        let mut v = vec![Some(6.0); 24];
        v[3] = None;
        v[10] = None;
        v[17] = None;
        let out = impute_kalman_struct(&TimeSeries::new(v, 4, 1.0).unwrap()).unwrap();
        assert!(out.values().iter().all(|x| (x - 6.0).abs() < 1e-4));
        assert_eq!(out.filled_indices, [3, 10, 17]);
    }

    #[test]
    fn leading_gap_follows_trend() {
        let mut v: Vec<Option<f64>> = (0..30).map(|t| Some(10.0 + 2.0 * t as f64)).collect();
        v[0] = None;
        v[1] = None;
        v[12] = None;
        let out = impute_kalman_struct(&TimeSeries::new(v, 1, 1.0).unwrap()).unwrap();
        for t in [0, 1, 12] {
            assert!((out.values()[t] - (10.0 + 2.0 * t as f64)).abs() < 1e-3, "t = {t}");
        }
    }
}
