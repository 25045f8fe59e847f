mod common;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use tsimpute::statespace::{kalman_filter, kalman_smooth, log_likelihood, StateSpaceModel};

#[test]
fn local_level_matches_joint_gaussian() {
    let mut rng = common::rng(11);
    let model = StateSpaceModel {
        transition: DMatrix::from_element(1, 1, 1.0),
        observation: DVector::from_element(1, 1.0),
        state_covariance: DMatrix::from_element(1, 1, 0.3),
        observation_variance: 0.8,
        initial_state: DVector::from_element(1, 0.0),
        initial_covariance: DMatrix::from_element(1, 1, 2.0),
    };
    let y: Vec<Option<f64>> = (0..5).map(|_| Some(common::normal(&mut rng))).collect();
    let (ll, sm) = common::kalman_discrepancy(&model, &y);
    assert!(ll < 1e-8, "log-likelihood off by {ll}");
    assert!(sm < 1e-8, "smoothed means off by {sm}");
}

#[test]
fn random_models_match_joint_gaussian() {
    let mut rng = common::rng(2024);
    for case in 0..100 {
        let model = common::random_model(&mut rng);
        let n = rng.random_range(1..=8);
        let drop = if case % 2 == 0 { 0.0 } else { 0.35 };
        let y = common::simulate(&model, n, drop, &mut rng);
        let (ll, sm) = common::kalman_discrepancy(&model, &y);
        assert!(ll < 1e-8, "case {case}: log-likelihood off by {ll}");
        assert!(sm < 1e-8, "case {case}: smoothed means off by {sm}");
    }
}

#[test]
fn gap_estimate_is_conditional_mean() {
    // AR(1) with phi=0.6, observed on both sides of one gap.
    let phi: f64 = 0.6;
    let var = 1.0 / (1.0 - phi * phi);
    let model = StateSpaceModel {
        transition: DMatrix::from_element(1, 1, phi),
        observation: DVector::from_element(1, 1.0),
        state_covariance: DMatrix::from_element(1, 1, 1.0),
        observation_variance: 0.0,
        initial_state: DVector::from_element(1, 0.0),
        initial_covariance: DMatrix::from_element(1, 1, var),
    };
    let y = [Some(1.0), None, Some(2.0)];
    let out = kalman_smooth(&model, &y).unwrap();
    let expected = phi / (1.0 + phi * phi) * (1.0 + 2.0);
    let got = out.smoothed.unwrap().means[1][0];
    assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
}

#[test]
fn likelihood_term_count_tracks_observations() {
    let mut rng = common::rng(5);
    for _ in 0..30 {
        let model = common::random_model(&mut rng);
        let y = common::simulate(&model, 20, 0.4, &mut rng);
        let k = y.iter().flatten().count();
        let out = kalman_filter(&model, &y).unwrap();
        assert_eq!(out.likelihood_terms, k);
        let (ll, terms) = log_likelihood(&model, &y, 0).unwrap();
        assert_eq!(terms, k);
        assert!((ll - out.log_likelihood).abs() < 1e-10);
        let (_, after_burn) = log_likelihood(&model, &y, 3).unwrap();
        assert_eq!(after_burn, k.saturating_sub(3));
    }
}

#[test]
fn smoothed_covariance_never_exceeds_filtered() {
    let mut rng = common::rng(8);
    for _ in 0..30 {
        let model = common::random_model(&mut rng);
        let y = common::simulate(&model, 15, 0.3, &mut rng);
        let out = kalman_smooth(&model, &y).unwrap();
        let smoothed = out.smoothed.as_ref().unwrap();
        for (s, f) in smoothed.covs.iter().zip(&out.filtered_covs) {
            assert!(s.trace() <= f.trace() + 1e-8);
            assert!((s - s.transpose()).amax() < 1e-8);
            assert!(s.clone().symmetric_eigen().eigenvalues.min() > -1e-8);
        }
        assert!(out.log_likelihood.is_finite());
    }
}
