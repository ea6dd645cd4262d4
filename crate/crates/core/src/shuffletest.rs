//! Shuffle (permutation) test of the no-memory null hypothesis H = <H^s>.
//!
//! The statistic is the DMA or DFA exponent. Returns are reshuffled
//! `n_replicates` times, each shuffle is pushed through the same estimator
//! over the scaling range chosen on the original series, and the two-tailed
//! p-value compares |H - <H^s>| with the spread of the shuffled ensemble.

use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::detrend::{FluctuationFunction, Method, ScaleGrid};
use crate::error::{Error, Result};
use crate::scaling::{fit_power_law, RangePolicy, ScalingFit};
use crate::seed::{derive_seed, rng};
use crate::stats::{mean, quantile_sorted, sorted};
use crate::timeseries::Profile;

pub const SIGNIFICANCE_LEVEL: f64 = 0.01;
pub const DEFAULT_REPLICATES: usize = 10_000;

/// Uniform random permutation of `values`.
pub fn shuffle(values: &[f64], seed: u64) -> Vec<f64> {
    let mut out = values.to_vec();
    out.shuffle(&mut rng(seed));
    out
}

/// Fraction of ensemble members whose deviation from the ensemble mean is
/// strictly larger than that of `hurst`.
pub fn two_tailed_p(hurst: f64, ensemble: &[f64]) -> f64 {
    assert!(!ensemble.is_empty(), "p-value of an empty ensemble");
    let center = mean(ensemble);
    let observed = (hurst - center).abs();
    let exceed = ensemble.iter().filter(|h| (*h - center).abs() > observed).count();
    exceed as f64 / ensemble.len() as f64
}

/// Original-series estimate: fluctuation function plus the fit over the
/// range picked by `policy`.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub fluctuation: FluctuationFunction,
    pub fit: ScalingFit,
}

pub fn estimate(increments: &[f64], method: Method, grid: &ScaleGrid, policy: RangePolicy) -> Result<Estimate> {
    let profile = Profile::from_increments(increments)?;
    let fluctuation = method.fluctuation(&profile, grid)?;
    let range = policy.resolve(&fluctuation)?;
    let fit = fit_power_law(&fluctuation, range)?;
    Ok(Estimate { fluctuation, fit })
}

/// Exponent over a fixed range, evaluating only the scales inside it.
pub fn estimate_in_range(
    increments: &[f64],
    method: Method,
    grid: &ScaleGrid,
    range: (usize, usize),
) -> Result<ScalingFit> {
    let profile = Profile::from_increments(increments)?;
    let sub = grid.restrict(range.0, range.1)?;
    let fluctuation = method.fluctuation(&profile, &sub)?;
    fit_power_law(&fluctuation, range)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    pub method: Method,
    pub grid: ScaleGrid,
    pub policy: RangePolicy,
    pub n_replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShuffleTestResult {
    pub method: Method,
    pub label: String,
    #[serde(rename = "H")]
    pub hurst: f64,
    pub fit: ScalingFit,
    /// Scaling range of the original series, reused for every replicate.
    pub range: (usize, usize),
    pub mean_hs: f64,
    pub p: f64,
    pub q025: f64,
    pub q975: f64,
    pub n_replicates: usize,
    pub redraws: usize,
    pub seed: u64,
    pub significance: f64,
    pub rejected: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ensemble: Vec<f64>,
}

impl ShuffleTestResult {
    pub fn without_ensemble(mut self) -> Self {
        self.ensemble = Vec::new();
        self
    }

    pub fn verdict(&self) -> &'static str {
        if self.rejected { "rejected" } else { "not rejected" }
    }
}

impl fmt::Display for ShuffleTestResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: H = {:.4}, <H^s> = {:.4}, p = {:.4} -> null {} at the {} level",
            self.label,
            self.hurst,
            self.mean_hs,
            self.p,
            self.verdict(),
            self.significance
        )
    }
}

/// Ensemble of shuffled exponents, ordered by replicate index.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub values: Vec<f64>,
    pub redraws: usize,
}

/// Runs `n` replicates over a fixed range. Replicate `i` draws its
/// permutation from `derive_seed(seed, [i, attempt])`; a failed estimate is
/// retried with the next attempt, up to `n / 100` redraws in total.
pub fn shuffled_ensemble(
    increments: &[f64],
    method: Method,
    grid: &ScaleGrid,
    range: (usize, usize),
    n: usize,
    seed: u64,
) -> Result<Ensemble> {
    let cap = n / 100;
    let sub = grid.restrict(range.0, range.1)?;
    let outcomes: Vec<std::result::Result<(f64, usize), ()>> = (0..n)
        .into_par_iter()
        .map(|i| {
            for attempt in 0..=cap {
                let shuffled = shuffle(increments, derive_seed(seed, &[i as u64, attempt as u64]));
                if let Ok(fit) = estimate_in_range(&shuffled, method, &sub, range) {
                    return Ok((fit.hurst, attempt));
                }
            }
            Err(())
        })
        .collect();

    let mut values = Vec::with_capacity(n);
    let mut redraws = 0;
    for outcome in outcomes {
        match outcome {
            Ok((h, attempts)) => {
                values.push(h);
                redraws += attempts;
            }
            Err(()) => {
                redraws += cap + 1;
            }
        }
    }
    if redraws > cap || values.len() < n {
        return Err(Error::TooManyRedraws { redraws, cap });
    }
    Ok(Ensemble { values, redraws })
}

/// Full test on one return series.
pub fn efficiency_test(increments: &[f64], cfg: &TestConfig) -> Result<ShuffleTestResult> {
    if cfg.n_replicates == 0 {
        return Err(Error::Config("at least one shuffle replicate is required".into()));
    }
    cfg.method.validate()?;
    let original = estimate(increments, cfg.method, &cfg.grid, cfg.policy)?;
    let range = original.fit.range;
    let ensemble = shuffled_ensemble(increments, cfg.method, &cfg.grid, range, cfg.n_replicates, cfg.seed)?;
    Ok(assemble(cfg, original.fit, ensemble))
}

fn assemble(cfg: &TestConfig, fit: ScalingFit, ensemble: Ensemble) -> ShuffleTestResult {
    let p = two_tailed_p(fit.hurst, &ensemble.values);
    let order = sorted(&ensemble.values);
    ShuffleTestResult {
        method: cfg.method,
        label: cfg.method.to_string(),
        hurst: fit.hurst,
        fit,
        range: fit.range,
        mean_hs: mean(&ensemble.values),
        p,
        q025: quantile_sorted(&order, 0.025),
        q975: quantile_sorted(&order, 0.975),
        n_replicates: cfg.n_replicates,
        redraws: ensemble.redraws,
        seed: cfg.seed,
        significance: SIGNIFICANCE_LEVEL,
        rejected: p <= SIGNIFICANCE_LEVEL,
        ensemble: ensemble.values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detrend::default_scales;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng(seed);
        (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
    }

    #[test]
    fn singleton_shuffle_is_identity() {
        assert_eq!(shuffle(&[3.5], 9), vec![3.5]);
    }

    #[test]
    fn shuffle_preserves_multiset() {
        let v = noise(257, 1);
        let s = shuffle(&v, 77);
        assert_ne!(s, v);
        assert_eq!(sorted(&s), sorted(&v));
    }

    #[test]
    fn p_value_hand_count() {
        assert!((two_tailed_p(0.52, &[0.45, 0.50, 0.55]) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(two_tailed_p(0.50, &[0.45, 0.50, 0.55]), 2.0 / 3.0);
        assert_eq!(two_tailed_p(0.25, &[0.25, 0.75]), 0.0);
        assert_eq!(two_tailed_p(0.5, &[0.25, 0.75]), 1.0);
        assert_eq!(two_tailed_p(0.9, &[0.4]), 0.0);
    }

    #[test]
    fn p_value_at_member_is_rank_stepped() {
        let ens = [0.1, 0.35, 0.4, 0.62, 0.9];
        let center = mean(&ens);
        for h in ens {
            let p = two_tailed_p(h, &ens);
            let rank = ens.iter().filter(|x| (*x - center).abs() > (h - center).abs()).count();
            assert_eq!(p, rank as f64 / 5.0);
        }
        let mut ps: Vec<f64> = ens.iter().map(|h| two_tailed_p(*h, &ens)).collect();
        ps.sort_by(f64::total_cmp);
        assert_eq!(ps, vec![0.0, 0.2, 0.4, 0.6, 0.8]);
    }

    #[test]
    fn small_test_runs_and_is_deterministic() {
        let r = noise(2048, 5);
        let cfg = TestConfig {
            method: Method::DFA1,
            grid: default_scales(r.len(), 20).unwrap(),
            policy: RangePolicy::Full,
            n_replicates: 120,
            seed: 11,
        };
        let a = efficiency_test(&r, &cfg).unwrap();
        let b = efficiency_test(&r, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ensemble.len(), 120);
        assert_eq!(a.p, two_tailed_p(a.hurst, &a.ensemble));
        assert!(a.q025 <= a.mean_hs && a.mean_hs <= a.q975);
        assert_eq!(a.redraws, 0);
        assert!(a.to_string().starts_with("DFA-1: H = "));
    }

    #[test]
    fn replicates_can_be_recomputed_individually() {
        let r = noise(1000, 6);
        let grid = default_scales(r.len(), 20).unwrap();
        let range = (10, 100);
        let ens = shuffled_ensemble(&r, Method::CDMA, &grid, range, 20, 3).unwrap();
        let shuffled = shuffle(&r, derive_seed(3, &[13, 0]));
        let single = estimate_in_range(&shuffled, Method::CDMA, &grid, range).unwrap();
        assert_eq!(ens.values[13], single.hurst);
    }

    #[test]
    fn degenerate_series_aborts() {
        let r = vec![0.0; 1000];
        let cfg = TestConfig {
            method: Method::BDMA,
            grid: default_scales(r.len(), 20).unwrap(),
            policy: RangePolicy::Full,
            n_replicates: 10,
            seed: 1,
        };
        assert!(matches!(efficiency_test(&r, &cfg), Err(Error::Degenerate(_))));
        let cfg = TestConfig { n_replicates: 0, ..cfg };
        assert!(matches!(efficiency_test(&noise(1000, 1), &cfg), Err(Error::Config(_))));
    }
}
