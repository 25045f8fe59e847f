use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::StateSpaceModel;
use crate::error::{Error, Result};

/// Filter (and optionally smoother) output, one entry per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanOutput {
    /// One-step predictions `a_t = E[alpha_t | y_1..y_{t-1}]`.
    pub predicted_means: Vec<DVector<f64>>,
    pub predicted_covs: Vec<DMatrix<f64>>,
    /// `E[alpha_t | y_1..y_t]`.
    pub filtered_means: Vec<DVector<f64>>,
    pub filtered_covs: Vec<DMatrix<f64>>,
    /// Present only for [`kalman_smooth`].
    pub smoothed: Option<SmoothedStates>,
    pub log_likelihood: f64,
    /// Number of Gaussian terms summed into `log_likelihood`.
    pub likelihood_terms: usize,
}

/// `E[alpha_t | y_1..y_n]` and its covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedStates {
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
}

/// Row-major working copy of a model with `T` and `Z` stored sparsely.
struct Compiled {
    m: usize,
    t_nz: Vec<(usize, usize, f64)>,
    z_nz: Vec<(usize, f64)>,
    q: Vec<f64>,
    h: f64,
}

impl Compiled {
    fn new(model: &StateSpaceModel) -> Self {
        let m = model.state_dim();
        let mut t_nz = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let v = model.transition[(i, j)];
                if v != 0.0 {
                    t_nz.push((i, j, v));
                }
            }
        }
        let z_nz = model
            .observation
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        Self {
            m,
            t_nz,
            z_nz,
            q: row_major(&model.state_covariance),
            h: model.observation_variance,
        }
    }

    fn z_dot(&self, x: &[f64]) -> f64 {
        self.z_nz.iter().map(|&(i, z)| z * x[i]).sum()
    }

    /// `P Z` for symmetric `P`.
    fn p_z(&self, p: &[f64], out: &mut [f64]) {
        let m = self.m;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.z_nz.iter().map(|&(j, z)| p[i * m + j] * z).sum();
        }
    }

    fn predict_mean(&self, a: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for &(i, j, v) in &self.t_nz {
            out[i] += v * a[j];
        }
    }

    /// `out = T P T' + Q`, symmetrized.
    fn predict_cov(&self, p: &[f64], tp: &mut [f64], out: &mut [f64]) {
        let m = self.m;
        tp.fill(0.0);
        for &(i, j, v) in &self.t_nz {
            for c in 0..m {
                tp[i * m + c] += v * p[j * m + c];
            }
        }
        out.copy_from_slice(&self.q);
        for &(k, j, v) in &self.t_nz {
            for i in 0..m {
                out[i * m + k] += v * tp[i * m + j];
            }
        }
        symmetrize(out, m);
    }
}

fn row_major(mat: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = mat.shape();
    (0..r)
        .flat_map(|i| (0..c).map(move |j| mat[(i, j)]))
        .collect()
}

fn to_matrix(flat: &[f64], m: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(m, m, flat)
}

fn symmetrize(p: &mut [f64], m: usize) {
    for i in 0..m {
        for j in i + 1..m {
            let avg = 0.5 * (p[i * m + j] + p[j * m + i]);
            p[i * m + j] = avg;
            p[j * m + i] = avg;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Step {
    Missing,
    /// Zero innovation variance with a consistent observation: it carries no
    /// new information and contributes no likelihood term.
    Exact,
    Updated { innovation: f64, variance: f64 },
}

/// Measurement update in place; returns what happened.
fn update(
    c: &Compiled,
    time: usize,
    y: Option<f64>,
    a: &mut [f64],
    p: &mut [f64],
    pz: &mut [f64],
) -> Result<Step> {
    let Some(y) = y else {
        return Ok(Step::Missing);
    };
    let m = c.m;
    c.p_z(p, pz);
    let innovation = y - c.z_dot(a);
    let spread: f64 = c.z_nz.iter().map(|&(i, z)| (z * pz[i]).abs()).sum::<f64>() + c.h;
    let variance = c.z_dot(pz) + c.h;
    if !variance.is_finite() || !innovation.is_finite() {
        return Err(Error::DegenerateInnovation { time, variance });
    }
    if variance <= 1e-12 * spread {
        if variance >= -1e-8 * spread && innovation.abs() <= 1e-8 * (1.0 + y.abs()) {
            return Ok(Step::Exact);
        }
        return Err(Error::DegenerateInnovation { time, variance });
    }
    let scale = innovation / variance;
    for i in 0..m {
        a[i] += pz[i] * scale;
    }
    for i in 0..m {
        let gi = pz[i] / variance;
        for j in 0..m {
            p[i * m + j] -= gi * pz[j];
        }
    }
    symmetrize(p, m);
    Ok(Step::Updated {
        innovation,
        variance,
    })
}

fn gaussian_term(innovation: f64, variance: f64) -> f64 {
    -0.5 * ((2.0 * PI).ln() + variance.ln() + innovation * innovation / variance)
}

/// Prediction-error log-likelihood, skipping the first `burn_in` likelihood
/// terms. Allocates only O(m²) workspace.
pub fn log_likelihood(
    model: &StateSpaceModel,
    observations: &[Option<f64>],
    burn_in: usize,
) -> Result<(f64, usize)> {
    model.validate()?;
    let c = Compiled::new(model);
    let m = c.m;
    let mut a: Vec<f64> = model.initial_state.iter().copied().collect();
    let mut p = row_major(&model.initial_covariance);
    let (mut next_a, mut next_p, mut tp, mut pz) =
        (vec![0.0; m], vec![0.0; m * m], vec![0.0; m * m], vec![0.0; m]);
    let mut total = 0.0;
    let mut seen = 0usize;
    let mut terms = 0usize;
    for (t, &y) in observations.iter().enumerate() {
        if let Step::Updated {
            innovation,
            variance,
        } = update(&c, t, y, &mut a, &mut p, &mut pz)?
        {
            seen += 1;
            if seen > burn_in {
                total += gaussian_term(innovation, variance);
                terms += 1;
            }
        }
        c.predict_mean(&a, &mut next_a);
        c.predict_cov(&p, &mut tp, &mut next_p);
        std::mem::swap(&mut a, &mut next_a);
        std::mem::swap(&mut p, &mut next_p);
    }
    Ok((total, terms))
}

struct FilterRun {
    m: usize,
    predicted_a: Vec<f64>,
    predicted_p: Vec<f64>,
    filtered_a: Vec<f64>,
    filtered_p: Vec<f64>,
    steps: Vec<Step>,
    log_likelihood: f64,
    terms: usize,
}

fn run_filter(c: &Compiled, model: &StateSpaceModel, observations: &[Option<f64>]) -> Result<FilterRun> {
    let m = c.m;
    let n = observations.len();
    let mut run = FilterRun {
        m,
        predicted_a: Vec::with_capacity(n * m),
        predicted_p: Vec::with_capacity(n * m * m),
        filtered_a: Vec::with_capacity(n * m),
        filtered_p: Vec::with_capacity(n * m * m),
        steps: Vec::with_capacity(n),
        log_likelihood: 0.0,
        terms: 0,
    };
    let mut a: Vec<f64> = model.initial_state.iter().copied().collect();
    let mut p = row_major(&model.initial_covariance);
    let (mut tp, mut pz) = (vec![0.0; m * m], vec![0.0; m]);
    for (t, &y) in observations.iter().enumerate() {
        run.predicted_a.extend_from_slice(&a);
        run.predicted_p.extend_from_slice(&p);
        let step = update(c, t, y, &mut a, &mut p, &mut pz)?;
        if let Step::Updated {
            innovation,
            variance,
        } = step
        {
            run.log_likelihood += gaussian_term(innovation, variance);
            run.terms += 1;
        }
        run.steps.push(step);
        run.filtered_a.extend_from_slice(&a);
        run.filtered_p.extend_from_slice(&p);
        let mut next_a = vec![0.0; m];
        let mut next_p = vec![0.0; m * m];
        c.predict_mean(&a, &mut next_a);
        c.predict_cov(&p, &mut tp, &mut next_p);
        a = next_a;
        p = next_p;
    }
    Ok(run)
}

impl FilterRun {
    fn into_output(self, smoothed: Option<SmoothedStates>) -> KalmanOutput {
        let m = self.m;
        let vecs = |flat: &[f64]| flat.chunks(m).map(DVector::from_column_slice).collect();
        let mats = |flat: &[f64]| flat.chunks(m * m).map(|c| to_matrix(c, m)).collect();
        KalmanOutput {
            predicted_means: vecs(&self.predicted_a),
            predicted_covs: mats(&self.predicted_p),
            filtered_means: vecs(&self.filtered_a),
            filtered_covs: mats(&self.filtered_p),
            smoothed,
            log_likelihood: self.log_likelihood,
            likelihood_terms: self.terms,
        }
    }
}

/// Kalman filter over `observations` (`None` = missing).
pub fn kalman_filter(model: &StateSpaceModel, observations: &[Option<f64>]) -> Result<KalmanOutput> {
    model.validate()?;
    let c = Compiled::new(model);
    Ok(run_filter(&c, model, observations)?.into_output(None))
}

/// Fixed-interval smoother.
///
/// Backward recursion with `r_n = 0`, `N_n = 0`:
/// `r_{t-1} = Z v_t / F_t + L_t' r_t`, `N_{t-1} = Z Z' / F_t + L_t' N_t L_t`
/// with `L_t = T - K_t Z'`, `K_t = T P_t Z / F_t`; at missing steps
/// `r_{t-1} = T' r_t`, `N_{t-1} = T' N_t T`. Then
/// `alpha_hat_t = a_t + P_t r_{t-1}` and `V_t = P_t - P_t N_{t-1} P_t`.
pub fn kalman_smooth(model: &StateSpaceModel, observations: &[Option<f64>]) -> Result<KalmanOutput> {
    model.validate()?;
    let c = Compiled::new(model);
    let run = run_filter(&c, model, observations)?;
    let m = c.m;
    let n = observations.len();

    let mut means = vec![DVector::zeros(m); n];
    let mut covs = vec![DMatrix::zeros(m, m); n];
    let mut r = vec![0.0; m];
    let mut big_n = vec![0.0; m * m];
    let (mut r_next, mut n_t, mut tt_n) = (vec![0.0; m], vec![0.0; m * m], vec![0.0; m * m]);
    let (mut pz, mut k, mut w) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut pn = vec![0.0; m * m];

    for t in (0..n).rev() {
        let a = &run.predicted_a[t * m..(t + 1) * m];
        let p = &run.predicted_p[t * m * m..(t + 1) * m * m];

        // n_t = N T  (column j of N T = sum over nonzeros (k, j) of T_kj * column k of N)
        n_t.fill(0.0);
        for &(kk, j, v) in &c.t_nz {
            for i in 0..m {
                n_t[i * m + j] += v * big_n[i * m + kk];
            }
        }
        // r_next = T' r
        r_next.fill(0.0);
        for &(kk, i, v) in &c.t_nz {
            r_next[i] += v * r[kk];
        }

        match run.steps[t] {
            Step::Updated {
                innovation,
                variance,
            } => {
                c.p_z(p, &mut pz);
                c.predict_mean(&pz, &mut k);
                k.iter_mut().for_each(|x| *x /= variance);
                // N L = N T - (N K) Z'
                for i in 0..m {
                    w[i] = (0..m).map(|j| big_n[i * m + j] * k[j]).sum();
                }
                for i in 0..m {
                    for &(j, z) in &c.z_nz {
                        n_t[i * m + j] -= w[i] * z;
                    }
                }
                // L' r = T' r - Z (K' r)
                let kr: f64 = k.iter().zip(&r).map(|(a, b)| a * b).sum();
                for &(j, z) in &c.z_nz {
                    r_next[j] += z * (innovation / variance - kr);
                }
                // L' (N L) = T' (N L) - Z (K' (N L))
                left_multiply_t_transpose(&c, &n_t, &mut tt_n);
                for col in 0..m {
                    let kn: f64 = (0..m).map(|i| k[i] * n_t[i * m + col]).sum();
                    for &(j, z) in &c.z_nz {
                        tt_n[j * m + col] -= z * kn;
                    }
                }
                for &(i, zi) in &c.z_nz {
                    for &(j, zj) in &c.z_nz {
                        tt_n[i * m + j] += zi * zj / variance;
                    }
                }
            }
            Step::Missing | Step::Exact => {
                left_multiply_t_transpose(&c, &n_t, &mut tt_n);
            }
        }
        symmetrize(&mut tt_n, m);
        std::mem::swap(&mut r, &mut r_next);
        std::mem::swap(&mut big_n, &mut tt_n);

        // alpha_hat = a + P r ; V = P - P N P
        let mut mean = DVector::zeros(m);
        for i in 0..m {
            mean[i] = a[i] + (0..m).map(|j| p[i * m + j] * r[j]).sum::<f64>();
        }
        for i in 0..m {
            for j in 0..m {
                pn[i * m + j] = (0..m).map(|l| p[i * m + l] * big_n[l * m + j]).sum();
            }
        }
        let mut cov = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let pnp: f64 = (0..m).map(|l| pn[i * m + l] * p[l * m + j]).sum();
                let v = p[i * m + j] - pnp;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        means[t] = mean;
        covs[t] = cov;
    }
    if n > 0 {
        // Boundary condition: the last smoothed state is the last filtered state.
        means[n - 1] = DVector::from_column_slice(&run.filtered_a[(n - 1) * m..n * m]);
        covs[n - 1] = to_matrix(&run.filtered_p[(n - 1) * m * m..], m);
    }
    Ok(run.into_output(Some(SmoothedStates { means, covs })))
}

/// `out = T' x` for row-major `x`.
fn left_multiply_t_transpose(c: &Compiled, x: &[f64], out: &mut [f64]) {
    let m = c.m;
    out.fill(0.0);
    for &(kk, i, v) in &c.t_nz {
        for col in 0..m {
            out[i * m + col] += v * x[kk * m + col];
        }
    }
}
