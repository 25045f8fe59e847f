mod common;

use rand::Rng;
use tsimpute::bench::{generate_synthetic, SyntheticKind, SyntheticSpec};
use tsimpute::metrics::rmse;
use tsimpute::statespace::{fit_bsm, impute_kalman_arima, impute_kalman_struct, kalman_smooth, select_ari_model};
use tsimpute::TimeSeries;

fn ramp_sinusoid(sigma: f64, seed: u64) -> TimeSeries {
    generate_synthetic(&SyntheticSpec {
        kind: SyntheticKind::TrendSeasonal,
        n: 144,
        frequency: 12,
        noise_sigma: sigma,
        seed,
    })
    .unwrap()
}

#[test]
fn bsm_observation_variance_near_truth() {
    let sigma: f64 = 0.1;
    let fit = fit_bsm(&ramp_sinusoid(sigma, 4)).unwrap();
    let ratio = fit.variances.observation / (sigma * sigma);
    assert!((1.0 / 3.0..=3.0).contains(&ratio), "ratio {ratio}, fit {:?}", fit.variances);
}

#[test]
fn bsm_fit_is_deterministic() {
    let series = ramp_sinusoid(1.0, 2);
    assert_eq!(fit_bsm(&series).unwrap().variances, fit_bsm(&series).unwrap().variances);
}

#[test]
fn local_linear_trend_slope() {
    let mut rng = common::rng(6);
    let values: Vec<f64> = (0..60).map(|t| 5.0 + 0.8 * t as f64 + 0.2 * common::normal(&mut rng)).collect();
    let series = TimeSeries::from_complete(&values, 1).unwrap();
    let fit = fit_bsm(&series).unwrap();
    let out = kalman_smooth(&fit.model, series.values()).unwrap();
    let slope = out.smoothed.unwrap().means.last().unwrap()[1];
    assert!((slope - 0.8).abs() < 0.08, "slope {slope}");
}

#[test]
fn struct_fills_noise_free_gaps() {
    let truth = ramp_sinusoid(0.0, 0);
    let gaps = [5, 17, 18, 40, 41, 42, 77, 100, 121, 139];
    let mut values = truth.values().to_vec();
    for &g in &gaps {
        values[g] = None;
    }
    let out = impute_kalman_struct(&truth.with_values(values).unwrap()).unwrap();
    let err = rmse(&out.series, &truth, &gaps).unwrap();
    assert!(err < 0.05 * 10.0, "rmse {err}");
}

#[test]
fn struct_leaves_complete_series_alone() {
    let series = ramp_sinusoid(1.0, 3);
    assert_eq!(impute_kalman_struct(&series).unwrap().series, series);
}

#[test]
fn arima_beats_mean_on_ar1() {
    let phi: f64 = 0.8;
    let process_variance = 1.0 / (1.0 - phi * phi);
    let mut total = 0.0;
    let mut count = 0.0;
    for seed in 0..25 {
        let mut rng = common::rng(seed);
        let mut x = common::normal(&mut rng) * process_variance.sqrt();
        let truth: Vec<f64> = (0..500)
            .map(|_| {
                let v = x;
                x = phi * x + common::normal(&mut rng);
                v
            })
            .collect();
        let mut values: Vec<Option<f64>> = truth.iter().copied().map(Some).collect();
        let mut gaps = Vec::new();
        while gaps.len() < 20 {
            let g = rng.random_range(1..499);
            if values[g].is_some() {
                values[g] = None;
                gaps.push(g);
            }
        }
        let out = impute_kalman_arima(&TimeSeries::new(values, 1, 1.0).unwrap()).unwrap();
        for &g in &gaps {
            total += (out.values()[g] - truth[g]).powi(2);
            count += 1.0;
        }
    }
    let mse = total / count;
    assert!(mse < process_variance, "mse {mse} vs variance {process_variance}");
}

#[test]
fn white_noise_selects_order_zero() {
    let zero = (0..25)
        .filter(|&seed| {
            let mut rng = common::rng(500 + seed);
            let values: Vec<f64> = (0..500).map(|_| common::normal(&mut rng)).collect();
            let model = select_ari_model(&TimeSeries::from_complete(&values, 1).unwrap()).unwrap();
            model.order() == 0
        })
        .count();
    assert!(zero >= 20, "p = 0 chosen for {zero} of 25 seeds");
}
