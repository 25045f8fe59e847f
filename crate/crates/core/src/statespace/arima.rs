//! Kalman imputation under an automatically selected ARI(p, d) model,
//! `d` in {0, 1}, `p` in 0..=5, no moving-average terms.
//!
//! Order selection and Yule–Walker estimation run on the linearly pre-filled
//! series; only the smoothing pass sees the true gaps. For `d = 1` the level
//! is carried as a state (`z_t = z_{t-1} + x_t`), so the smoothed path honors
//! the observations on both sides of a gap instead of drifting from the left.

use nalgebra::{DMatrix, DVector};

use super::{kalman_smooth, StateSpaceModel};
use crate::error::{Error, Result};
use crate::imputation::{linear_fill, Algorithm, ImputationOutcome};
use crate::series::TimeSeries;

const MAX_AR_ORDER: usize = 5;
const MIN_LENGTH: usize = 20;

/// The selected model.
#[derive(Debug, Clone, PartialEq)]
pub struct AriModel {
    pub differences: usize,
    /// AR coefficients `phi_1..phi_p`.
    pub coefficients: Vec<f64>,
    pub innovation_variance: f64,
    /// Mean of the (differenced) series; the drift when `differences = 1`.
    pub mean: f64,
    pub aic: f64,
}

impl AriModel {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }
}

fn variance(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64
}

/// Biased autocovariances `gamma_0..=gamma_max_lag` of a centered series.
fn autocovariances(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    (0..=max_lag.min(n - 1))
        .map(|k| x[..n - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect()
}

/// Levinson–Durbin: coefficients and innovation variance for every order up
/// to `gamma.len() - 1`.
fn levinson_durbin(gamma: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let mut fits = vec![(Vec::new(), gamma[0])];
    let mut phi: Vec<f64> = Vec::new();
    let mut sigma2 = gamma[0];
    for k in 1..gamma.len() {
        if !(sigma2 > 0.0) {
            break;
        }
        let acc: f64 = phi.iter().enumerate().map(|(j, p)| p * gamma[k - 1 - j]).sum();
        let reflection = (gamma[k] - acc) / sigma2;
        let mut next: Vec<f64> = phi
            .iter()
            .enumerate()
            .map(|(j, p)| p - reflection * phi[k - 2 - j])
            .collect();
        next.push(reflection);
        sigma2 *= 1.0 - reflection * reflection;
        phi = next;
        fits.push((phi.clone(), sigma2));
    }
    fits
}

/// Selects `d` by the smaller sample variance and `p` by AIC over Yule–Walker
/// fits, `AIC = N ln(sigma2 N / (N - p - 1)) + 2p`.
pub fn select_ari_model(series: &TimeSeries) -> Result<AriModel> {
    let n = series.len();
    if n < MIN_LENGTH {
        return Err(Error::SeriesTooShort {
            len: n,
            required: MIN_LENGTH,
        });
    }
    if series.observed_count() < 2 {
        return Err(Error::AllMissing);
    }
    let prefilled = linear_fill(series.values()).ok_or(Error::AllMissing)?;
    let differenced: Vec<f64> = prefilled.windows(2).map(|w| w[1] - w[0]).collect();
    let differences = usize::from(variance(&differenced) <= variance(&prefilled));
    let w = if differences == 1 { differenced } else { prefilled };
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let centered: Vec<f64> = w.iter().map(|v| v - mean).collect();
    let gamma = autocovariances(&centered, MAX_AR_ORDER);

    let len = centered.len() as f64;
    let mut best: Option<AriModel> = None;
    for (coefficients, sigma2) in levinson_durbin(&gamma) {
        // Degrees-of-freedom corrected prediction variance, as in the usual
        // Yule-Walker AIC; the raw Levinson variance overfits white noise.
        let sigma2 = sigma2 * len / (len - (coefficients.len() + 1) as f64);
        let aic = if sigma2 > 0.0 {
            len * sigma2.ln() + 2.0 * coefficients.len() as f64
        } else {
            f64::NEG_INFINITY
        };
        if best.as_ref().is_none_or(|b| aic < b.aic) {
            best = Some(AriModel {
                differences,
                innovation_variance: sigma2.max(0.0),
                coefficients,
                mean,
                aic,
            });
        }
    }
    Ok(best.expect("order 0 is always fitted"))
}

/// Stationary covariance of the AR companion block: solves `P = T P T' + Q`.
fn stationary_covariance(transition: &DMatrix<f64>, noise: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let m = transition.nrows();
    let system = DMatrix::identity(m * m, m * m) - transition.kronecker(transition);
    let rhs = DVector::from_column_slice(noise.as_slice());
    let solution = system.lu().solve(&rhs)?;
    let p = DMatrix::from_column_slice(m, m, solution.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    let min_eig = p.clone().symmetric_eigen().eigenvalues.min();
    (min_eig >= -1e-10 * p.amax().max(1.0)).then_some(p)
}

fn companion(model: &AriModel) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let m = model.order().max(1);
    let mut t = DMatrix::zeros(m, m);
    for (j, phi) in model.coefficients.iter().enumerate() {
        t[(0, j)] = *phi;
    }
    for i in 1..m {
        t[(i, i - 1)] = 1.0;
    }
    let mut q = DMatrix::zeros(m, m);
    q[(0, 0)] = model.innovation_variance;
    let p0 = stationary_covariance(&t, &q).unwrap_or_else(|| {
        DMatrix::identity(m, m) * (super::DIFFUSE_SCALE * model.innovation_variance)
    });
    (t, q, p0)
}

/// State-space form of the selected model for the adjusted observations
/// (`y - mean` when `d = 0`, `y_t - drift * t` when `d = 1`).
fn state_space(model: &AriModel, initial_level: f64, level_variance: f64) -> StateSpaceModel {
    let (t_ar, q_ar, p_ar) = companion(model);
    let k = t_ar.nrows();
    if model.differences == 0 {
        let mut observation = DVector::zeros(k);
        observation[0] = 1.0;
        return StateSpaceModel {
            transition: t_ar,
            observation,
            state_covariance: q_ar,
            observation_variance: 0.0,
            initial_state: DVector::zeros(k),
            initial_covariance: p_ar,
        };
    }
    // State (z_{t-1}, x_t, ..., x_{t-k+1}); z_t = z_{t-1} + x_t.
    let m = k + 1;
    let mut transition = DMatrix::zeros(m, m);
    transition[(0, 0)] = 1.0;
    transition[(0, 1)] = 1.0;
    transition.view_mut((1, 1), (k, k)).copy_from(&t_ar);
    let mut state_covariance = DMatrix::zeros(m, m);
    state_covariance.view_mut((1, 1), (k, k)).copy_from(&q_ar);
    let mut initial_covariance = DMatrix::zeros(m, m);
    initial_covariance[(0, 0)] = level_variance;
    initial_covariance.view_mut((1, 1), (k, k)).copy_from(&p_ar);
    let mut observation = DVector::zeros(m);
    observation[0] = 1.0;
    observation[1] = 1.0;
    let mut initial_state = DVector::zeros(m);
    initial_state[0] = initial_level;
    StateSpaceModel {
        transition,
        observation,
        state_covariance,
        observation_variance: 0.0,
        initial_state,
        initial_covariance,
    }
}

/// Fills gaps by Kalman smoothing under [`select_ari_model`]'s choice.
pub fn impute_kalman_arima(series: &TimeSeries) -> Result<ImputationOutcome> {
    let model = select_ari_model(series)?;
    if series.is_complete() {
        return ImputationOutcome::new(series, vec![0.0; series.len()], Algorithm::KalmanArima);
    }
    let trend = |t: usize| {
        if model.differences == 1 {
            model.mean * t as f64
        } else {
            model.mean
        }
    };
    let adjusted: Vec<Option<f64>> = series
        .values()
        .iter()
        .enumerate()
        .map(|(t, v)| v.map(|v| v - trend(t)))
        .collect();
    let first = adjusted.iter().flatten().next().copied().unwrap_or(0.0);
    let spread = variance(&series.observed().collect::<Vec<_>>());
    let level_variance = super::DIFFUSE_SCALE * if spread > 0.0 { spread } else { 1.0 };
    let ss = state_space(&model, first, level_variance);
    let out = kalman_smooth(&ss, &adjusted)?;
    let smoothed = out.smoothed.expect("smoother output");
    let filled = smoothed
        .means
        .iter()
        .enumerate()
        .map(|(t, state)| ss.observe(state) + trend(t))
        .collect();
    ImputationOutcome::new(series, filled, Algorithm::KalmanArima)
}
