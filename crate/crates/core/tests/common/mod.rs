#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tsimpute::statespace::StateSpaceModel;

pub fn rng(seed: u64) -> ChaCha8Rng {
    tsimpute::missing::seeded_rng(seed)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_psd(rng: &mut impl Rng, m: usize, scale: f64) -> DMatrix<f64> {
    let l = DMatrix::from_fn(m, m, |_, _| normal(rng) * scale);
    &l * l.transpose()
}

/// A random small model; `h > 0` so the observation covariance is regular.
pub fn random_model(rng: &mut impl Rng) -> StateSpaceModel {
    let m = rng.random_range(1..=3);
    StateSpaceModel {
        transition: DMatrix::from_fn(m, m, |_, _| rng.random_range(-0.9..0.9)),
        observation: DVector::from_fn(m, |_, _| rng.random_range(-1.5..1.5)),
        state_covariance: random_psd(rng, m, 0.7),
        observation_variance: rng.random_range(0.05..1.0),
        initial_state: DVector::from_fn(m, |_, _| normal(rng)),
        initial_covariance: random_psd(rng, m, 1.0),
    }
}

/// Simulates the model; each value is dropped with probability `drop`.
pub fn simulate(model: &StateSpaceModel, n: usize, drop: f64, rng: &mut impl Rng) -> Vec<Option<f64>> {
    let m = model.transition.nrows();
    let chol = |p: &DMatrix<f64>| {
        let eig = p.clone().symmetric_eigen();
        let sqrt = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        &eig.eigenvectors * DMatrix::from_diagonal(&sqrt)
    };
    let draw = |p: &DMatrix<f64>, rng: &mut dyn rand::RngCore| {
        let z = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut *rng));
        chol(p) * z
    };
    let mut state = &model.initial_state + draw(&model.initial_covariance, rng);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let y = model.observation.dot(&state) + model.observation_variance.sqrt() * normal(rng);
        out.push(if rng.random::<f64>() < drop { None } else { Some(y) });
        state = &model.transition * state + draw(&model.state_covariance, rng);
    }
    out
}

pub struct JointOracle {
    pub log_likelihood: f64,
    pub smoothed_means: Vec<DVector<f64>>,
}

/// Assembles the joint Gaussian of all states and observed values and
/// conditions directly, with no recursion.
pub fn joint_gaussian(model: &StateSpaceModel, y: &[Option<f64>]) -> JointOracle {
    let n = y.len();
    let m = model.transition.nrows();
    let t = &model.transition;
    let z = &model.observation;

    let mut means = vec![model.initial_state.clone()];
    let mut marginal = vec![model.initial_covariance.clone()];
    for i in 1..n {
        means.push(t * &means[i - 1]);
        marginal.push(t * &marginal[i - 1] * t.transpose() + &model.state_covariance);
    }
    // Cov(alpha_s, alpha_u) = T^(s-u) Var(alpha_u) for s >= u.
    let mut big = DMatrix::zeros(n * m, n * m);
    for s in 0..n {
        for (u, var) in marginal.iter().enumerate().take(s + 1) {
            let mut block = var.clone();
            for _ in u..s {
                block = t * block;
            }
            big.view_mut((s * m, u * m), (m, m)).copy_from(&block);
            big.view_mut((u * m, s * m), (m, m)).copy_from(&block.transpose());
        }
    }
    let observed: Vec<usize> = (0..n).filter(|&i| y[i].is_some()).collect();
    let k = observed.len();
    // H maps the stacked state to the observed values.
    let mut h = DMatrix::zeros(k, n * m);
    for (r, &i) in observed.iter().enumerate() {
        for j in 0..m {
            h[(r, i * m + j)] = z[j];
        }
    }
    let state_mean = DVector::from_iterator(n * m, means.iter().flat_map(|v| v.iter().copied()));
    if k == 0 {
        return JointOracle {
            log_likelihood: 0.0,
            smoothed_means: means,
        };
    }
    let y_mean = &h * &state_mean;
    let y_cov = &h * &big * h.transpose() + DMatrix::identity(k, k) * model.observation_variance;
    let y_obs = DVector::from_iterator(k, observed.iter().map(|&i| y[i].unwrap()));
    let resid = &y_obs - &y_mean;

    let lu = y_cov.clone().lu();
    let solved = lu.solve(&resid).expect("regular observation covariance");
    let log_det = lu.determinant().ln();
    let log_likelihood = -0.5
        * (k as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + resid.dot(&solved));
    let cond = &state_mean + &big * h.transpose() * solved;
    let smoothed_means = (0..n).map(|i| cond.rows(i * m, m).into_owned()).collect();
    JointOracle {
        log_likelihood,
        smoothed_means,
    }
}

/// Largest absolute difference between the recursive and brute-force answers.
pub fn kalman_discrepancy(model: &StateSpaceModel, y: &[Option<f64>]) -> (f64, f64) {
    let out = tsimpute::statespace::kalman_smooth(model, y).expect("smoother runs");
    let oracle = joint_gaussian(model, y);
    let ll = (out.log_likelihood - oracle.log_likelihood).abs();
    let sm = out
        .smoothed
        .expect("smoothed states")
        .means
        .iter()
        .zip(&oracle.smoothed_means)
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    (ll, sm)
}

/// Series with random gaps; the first and last entries may be missing.
pub fn random_gappy(rng: &mut impl Rng, n: usize, frequency: usize, rate: f64) -> tsimpute::TimeSeries {
    let level = rng.random_range(-50.0..50.0);
    let slope = rng.random_range(-1.0..1.0);
    let amp = rng.random_range(0.0..5.0);
    let values: Vec<Option<f64>> = (0..n)
        .map(|t| {
            let v = level
                + slope * t as f64
                + amp * (2.0 * std::f64::consts::PI * t as f64 / frequency as f64).sin()
                + normal(rng);
            (rng.random::<f64>() >= rate).then_some(v)
        })
        .collect();
    let mut values = values;
    // Keep one full cycle and a few scattered points observed so every
    // method's preconditions hold.
    let keep = (frequency..2 * frequency).chain([1, n / 2, n - 2]);
    for i in keep {
        if values[i].is_none() {
            values[i] = Some(level + slope * i as f64);
        }
    }
    tsimpute::TimeSeries::new(values, frequency, 1.0).unwrap()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}
