//! Linear-Gaussian state-space models with scalar observations.
//!
//! ```text
//! y_t       = Z' alpha_t + eps_t,      eps_t ~ N(0, h)
//! alpha_t+1 = T alpha_t + eta_t,       eta_t ~ N(0, Q)
//! alpha_1   ~ N(a0, P0)
//! ```
//!
//! Filtering is the usual predict/update recursion; missing observations
//! skip the update. Smoothing uses the backward `r`/`N` recursion, which
//! needs no matrix inversion and so tolerates singular predicted covariances.

mod arima;
mod kalman;
mod structural;

pub use arima::{impute_kalman_arima, select_ari_model, AriModel};
pub use kalman::{kalman_filter, kalman_smooth, log_likelihood, KalmanOutput, SmoothedStates};
pub use structural::{
    bsm_model, fit_bsm, impute_kalman_struct, BsmVariances, StructuralFit, DIFFUSE_SCALE,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    /// `T`, m × m.
    pub transition: DMatrix<f64>,
    /// `Z`, length m.
    pub observation: DVector<f64>,
    /// `Q`, m × m, symmetric PSD.
    pub state_covariance: DMatrix<f64>,
    /// `h >= 0`.
    pub observation_variance: f64,
    /// `a0`, length m.
    pub initial_state: DVector<f64>,
    /// `P0`, m × m, symmetric PSD.
    pub initial_covariance: DMatrix<f64>,
}

impl StateSpaceModel {
    pub fn state_dim(&self) -> usize {
        self.transition.nrows()
    }

    /// Expected observation for a state vector.
    pub fn observe(&self, state: &DVector<f64>) -> f64 {
        self.observation.dot(state)
    }

    /// Checks dimensions and that `Q` and `P0` are symmetric PSD.
    pub fn validate(&self) -> Result<()> {
        let m = self.state_dim();
        let square = |mat: &DMatrix<f64>| mat.nrows() == m && mat.ncols() == m;
        if m == 0 || !square(&self.transition) {
            return Err(Error::DimensionMismatch("transition must be square and non-empty".into()));
        }
        if self.observation.len() != m || self.initial_state.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "state dimension {m}, observation vector {}, initial state {}",
                self.observation.len(),
                self.initial_state.len()
            )));
        }
        if !square(&self.state_covariance) || !square(&self.initial_covariance) {
            return Err(Error::DimensionMismatch("covariances must be m x m".into()));
        }
        if !(self.observation_variance >= 0.0) || !self.observation_variance.is_finite() {
            return Err(Error::NotPositiveSemiDefinite("observation variance"));
        }
        check_psd(&self.state_covariance, "state covariance")?;
        check_psd(&self.initial_covariance, "initial covariance")?;
        Ok(())
    }
}

fn check_psd(mat: &DMatrix<f64>, name: &'static str) -> Result<()> {
    if mat.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveSemiDefinite(name));
    }
    let scale = mat.amax().max(1.0);
    let tol = 1e-10 * scale;
    if (mat - mat.transpose()).amax() > tol {
        return Err(Error::NotPositiveSemiDefinite(name));
    }
    let eig = mat.clone().symmetric_eigen();
    if eig.eigenvalues.min() < -tol {
        return Err(Error::NotPositiveSemiDefinite(name));
    }
    Ok(())
}
