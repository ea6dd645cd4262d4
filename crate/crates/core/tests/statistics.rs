//! Monte Carlo checks of the estimators, the shuffle and the fGn generator.

use std::collections::HashMap;

use effscan::detrend::default_scales;
use effscan::scaling::{detect_scaling_range, fit_power_law};
use effscan::seed::rng;
use effscan::shuffletest::estimate;
use effscan::stats::mean;
use effscan::synth::{fgn_autocovariance, generate_fgn, FgnSpec};
use effscan::{rolling_analysis, shuffle, BandFlag, FluctuationFunction, Method, PriceSeries, RangePolicy, RollingConfig};
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

fn white(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}

fn full_grid_h(x: &[f64], method: Method) -> f64 {
    let grid = default_scales(x.len(), 20).unwrap();
    estimate(x, method, &grid, RangePolicy::Full).unwrap().fit.hurst
}

#[test]
fn white_noise_exponents_near_half() {
    let n = 1 << 14;
    for method in [Method::DFA1, Method::CDMA] {
        let hs: Vec<f64> = (0..20u64).into_par_iter().map(|s| full_grid_h(&white(n, 100 + s), method)).collect();
        let inside = hs.iter().filter(|h| (0.45..=0.55).contains(*h)).count();
        assert!(inside >= 19, "{method}: {inside}/20 inside [0.45, 0.55]: {hs:?}");
    }
}

#[test]
fn one_sided_dma_is_unbiased_on_white_noise() {
    // sd is about 0.03 for one-sided windows, twice that of CDMA
    let n = 1 << 14;
    for method in [Method::BDMA, Method::FDMA] {
        let hs: Vec<f64> = (0..40u64).into_par_iter().map(|s| full_grid_h(&white(n, 300 + s), method)).collect();
        let m = mean(&hs);
        assert!((m - 0.5).abs() < 0.015, "{method}: mean {m}");
    }
}

#[test]
fn shuffle_is_uniform_over_s3() {
    let base = [1.0, 2.0, 3.0];
    let mut counts: HashMap<Vec<u64>, usize> = HashMap::new();
    let draws = 6000;
    for seed in 0..draws {
        let key = shuffle(&base, seed).iter().map(|v| *v as u64).collect();
        *counts.entry(key).or_default() += 1;
    }
    assert_eq!(counts.len(), 6);
    let expected = draws as f64 / 6.0;
    let mut chi2 = 0.0;
    for (perm, c) in &counts {
        let freq = *c as f64 / draws as f64;
        assert!((freq - 1.0 / 6.0).abs() <= 0.02, "{perm:?}: {freq}");
        chi2 += (*c as f64 - expected).powi(2) / expected;
    }
    // 5 degrees of freedom, 0.1% critical value
    assert!(chi2 < 20.52, "chi2 = {chi2}");
}

#[test]
fn range_search_on_noisy_power_law() {
    let scales = default_scales(7400, 20).unwrap().scales().to_vec();
    let noise: Normal<f64> = Normal::new(0.0, 0.05).unwrap();
    let mut good = 0;
    for seed in 0..100 {
        let mut r = rng(seed);
        let values: Vec<f64> = scales
            .iter()
            .map(|s| (*s as f64).sqrt() * noise.sample(&mut r).exp())
            .collect();
        let f = FluctuationFunction { method: Method::DFA1, n: 7400, scales: scales.clone(), values };
        let range = detect_scaling_range(&f, 15).unwrap();
        let fit = fit_power_law(&f, range).unwrap();
        assert_eq!(fit.n_points, 15);
        if (fit.hurst - 0.5).abs() <= 0.1 {
            good += 1;
        }
    }
    assert!(good >= 90, "{good}/100 within 0.5 +- 0.1");
}

#[test]
fn fgn_lag_one_autocorrelation() {
    let x = generate_fgn(&FgnSpec::new(1 << 14, 0.7, 21)).unwrap();
    let m = mean(&x);
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    let cov = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>();
    let rho = cov / var;
    let target = 2f64.powf(0.4) - 1.0;
    assert!((target - 0.3195).abs() < 1e-4);
    assert!((rho - target).abs() < 0.02, "rho = {rho}");
}

#[test]
fn fgn_empirical_autocovariance_matches_target() {
    // average over seeds to beat sampling noise at several lags
    let n = 2048;
    let h = 0.8;
    let seeds = 60;
    let lags = [0usize, 1, 2, 5, 20];
    let mut acc = vec![0.0; lags.len()];
    for seed in 0..seeds {
        let x = generate_fgn(&FgnSpec::new(n, h, seed)).unwrap();
        for (slot, &k) in acc.iter_mut().zip(&lags) {
            *slot += x.iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / (n - k) as f64;
        }
    }
    for (sum, &k) in acc.iter().zip(&lags) {
        let got = sum / seeds as f64;
        let want = fgn_autocovariance(k, h, 1.0);
        assert!((got - want).abs() < 0.05, "lag {k}: {got} vs {want}");
    }
}

#[test]
fn fgn_mean_and_variance() {
    let n = 1 << 14;
    let sigma = 2.0;
    let results: Vec<(f64, f64)> = (0..40u64)
        .into_par_iter()
        .map(|seed| {
            let x = generate_fgn(&FgnSpec { sigma, ..FgnSpec::new(n, 0.5, seed) }).unwrap();
            let m = mean(&x);
            (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64)
        })
        .collect();
    let bound = 4.0 * sigma / (n as f64).sqrt();
    let inside = results.iter().filter(|(m, _)| m.abs() <= bound).count();
    assert!(inside as f64 >= 0.95 * results.len() as f64);
    let avg_var = results.iter().map(|(_, v)| v).sum::<f64>() / results.len() as f64;
    assert!((avg_var - sigma * sigma).abs() < 0.05 * sigma * sigma, "{avg_var}");
}

#[test]
fn dfa_recovers_antipersistent_fgn() {
    let hs: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|seed| full_grid_h(&generate_fgn(&FgnSpec::new(1 << 14, 0.3, 500 + seed)).unwrap(), Method::DFA1))
        .collect();
    let m = mean(&hs);
    assert!((m - 0.3).abs() <= 0.03, "mean DFA-1 exponent {m}");
}

#[test]
fn recovered_exponent_is_monotone_in_target() {
    let targets = [0.2, 0.35, 0.5, 0.65, 0.8];
    for method in [Method::DFA1, Method::CDMA] {
        let means: Vec<f64> = targets
            .iter()
            .map(|&h| {
                let hs: Vec<f64> = (0..20u64)
                    .into_par_iter()
                    .map(|seed| full_grid_h(&generate_fgn(&FgnSpec::new(1 << 12, h, seed)).unwrap(), method))
                    .collect();
                mean(&hs)
            })
            .collect();
        assert!(means.windows(2).all(|w| w[0] < w[1]), "{method}: {means:?}");
    }
}

#[test]
fn rolling_band_calibration_on_random_walk() {
    let windows = 200;
    let size = 500;
    let x = white(windows * size, 77);
    let mut log_p = 0.0;
    let mut prices = vec![50.0];
    for r in &x {
        log_p += 0.02 * r;
        prices.push(50.0 * f64::exp(log_p));
    }
    let start = chrono::NaiveDate::from_ymd_opt(1980, 1, 1).unwrap();
    let dates = (0..prices.len()).map(|i| start + chrono::Days::new(i as u64)).collect();
    let series = PriceSeries::new(dates, prices).unwrap();
    // non-overlapping windows
    let cfg = RollingConfig { window_size: size, step: size, seed: 5, ..Default::default() };
    let result = rolling_analysis(&series, &cfg, None).unwrap();
    assert_eq!(result.len(), windows);
    let outside = result.iter().filter(|w| w.flag != BandFlag::Inside).count();
    assert!(outside as f64 <= 0.10 * windows as f64, "{outside}/{windows} outside the band");
}
