//! Exact fractional Gaussian noise by circulant embedding of the
//! autocovariance.

use chrono::NaiveDate;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng;
use crate::timeseries::PriceSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgnSpec {
    pub n: usize,
    pub hurst: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl FgnSpec {
    pub fn new(n: usize, hurst: f64, seed: u64) -> Self {
        Self { n, hurst, sigma: 1.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::Config(format!("hurst must lie in (0, 1), got {}", self.hurst)));
        }
        if self.n < 2 {
            return Err(Error::Config(format!("fGn length must be at least 2, got {}", self.n)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    /// Size of the circulant embedding, `2 (n - 1)`.
    pub fn embedding_len(&self) -> usize {
        2 * (self.n - 1)
    }
}

/// gamma(k) = sigma^2 / 2 * (|k+1|^2H - 2|k|^2H + |k-1|^2H)
pub fn fgn_autocovariance(k: usize, hurst: f64, sigma: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    let term = |x: f64| x.abs().powf(h2);
    0.5 * sigma * sigma * (term(k + 1.0) - 2.0 * term(k) + term(k - 1.0))
}

fn embedding_eigenvalues(spec: &FgnSpec) -> Result<Vec<f64>> {
    let n = spec.n;
    let m = spec.embedding_len();
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let lag = if j < n { j } else { m - j };
            Complex::new(fgn_autocovariance(lag, spec.hurst, spec.sigma), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut row);
    let max = row.iter().map(|c| c.re).fold(f64::MIN, f64::max);
    if let Some((k, c)) = row.iter().enumerate().find(|(_, c)| c.re < -1e-9 * max) {
        return Err(Error::Synthesis(format!(
            "circulant embedding eigenvalue {k} is negative ({})",
            c.re
        )));
    }
    Ok(row.iter().map(|c| c.re.max(0.0)).collect())
}

/// Builds the sequence from `2 * embedding_len` standard normal draws,
/// taken as (real, imaginary) pairs per frequency bin in ascending order.
pub fn fgn_from_gaussians(spec: &FgnSpec, gaussians: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    let m = spec.embedding_len();
    if gaussians.len() != 2 * m {
        return Err(Error::Config(format!(
            "expected {} gaussian draws, got {}",
            2 * m,
            gaussians.len()
        )));
    }
    let eigen = embedding_eigenvalues(spec)?;
    let mut spectrum: Vec<Complex<f64>> = eigen
        .iter()
        .zip(gaussians.chunks_exact(2))
        .map(|(lambda, z)| Complex::new(z[0], z[1]) * (lambda / m as f64).sqrt())
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut spectrum);
    Ok(spectrum[..spec.n].iter().map(|c| c.re).collect())
}

pub fn generate_fgn(spec: &FgnSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut r = rng(spec.seed);
    let draws: Vec<f64> = (0..2 * spec.embedding_len())
        .map(|_| StandardNormal.sample(&mut r))
        .collect();
    fgn_from_gaussians(spec, &draws)
}

/// Prices `start_price * exp(cumsum(increments))` on consecutive calendar
/// days; the first price carries no increment.
pub fn synthetic_prices(increments: &[f64], start: NaiveDate, start_price: f64) -> Result<PriceSeries> {
    let mut prices = Vec::with_capacity(increments.len() + 1);
    let mut log_p = start_price.ln();
    prices.push(start_price);
    for r in increments {
        log_p += r;
        prices.push(log_p.exp());
    }
    let dates = (0..prices.len())
        .map(|i| start + chrono::Days::new(i as u64))
        .collect();
    PriceSeries::new(dates, prices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean;

    #[test]
    fn autocovariance_values() {
        assert_eq!(fgn_autocovariance(0, 0.5, 2.0), 4.0);
        assert!(fgn_autocovariance(1, 0.5, 1.0).abs() < 1e-15);
        assert!(fgn_autocovariance(7, 0.5, 1.0).abs() < 1e-15);
        let rho1 = fgn_autocovariance(1, 0.7, 1.0) / fgn_autocovariance(0, 0.7, 1.0);
        assert!((rho1 - (2f64.powf(0.4) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn embedding_is_nonnegative_across_hurst() {
        for h in [0.05, 0.2, 0.5, 0.8, 0.95] {
            let spec = FgnSpec::new(1000, h, 0);
            let eig = embedding_eigenvalues(&spec).unwrap();
            assert_eq!(eig.len(), 1998);
        }
    }

    #[test]
    fn white_noise_at_half() {
        let spec = FgnSpec::new(1 << 14, 0.5, 3);
        let x = generate_fgn(&spec).unwrap();
        assert_eq!(x.len(), 1 << 14);
        let m = mean(&x);
        let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
        let lag1 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / x.len() as f64 / var;
        assert!(lag1.abs() < 0.03, "{lag1}");
    }

    #[test]
    fn sigma_scales_output() {
        let a = generate_fgn(&FgnSpec::new(64, 0.7, 5)).unwrap();
        let b = generate_fgn(&FgnSpec { sigma: 3.0, ..FgnSpec::new(64, 0.7, 5) }).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((3.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn negated_draws_negate_output() {
        let spec = FgnSpec::new(300, 0.35, 0);
        let mut r = rng(8);
        let z: Vec<f64> = (0..2 * spec.embedding_len()).map(|_| StandardNormal.sample(&mut r)).collect();
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let a = fgn_from_gaussians(&spec, &z).unwrap();
        let b = fgn_from_gaussians(&spec, &neg).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| *x == -*y));
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_fgn(&FgnSpec::new(10, 1.0, 0)).is_err());
        assert!(generate_fgn(&FgnSpec::new(10, 0.0, 0)).is_err());
        assert!(generate_fgn(&FgnSpec::new(1, 0.5, 0)).is_err());
        assert!(generate_fgn(&FgnSpec { sigma: 0.0, ..FgnSpec::new(10, 0.5, 0) }).is_err());
        assert_eq!(generate_fgn(&FgnSpec::new(2, 0.6, 0)).unwrap().len(), 2);
    }

    #[test]
    fn deterministic_by_seed() {
        let a = generate_fgn(&FgnSpec::new(100, 0.6, 1)).unwrap();
        assert_eq!(a, generate_fgn(&FgnSpec::new(100, 0.6, 1)).unwrap());
        assert_ne!(a, generate_fgn(&FgnSpec::new(100, 0.6, 2)).unwrap());
    }

    #[test]
    fn synthetic_prices_roundtrip_returns() {
        let inc = [0.1, -0.2, 0.05];
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let p = synthetic_prices(&inc, start, 100.0).unwrap();
        assert_eq!(p.len(), 4);
        let r = crate::timeseries::log_returns(&p).unwrap();
        for (a, b) in r.values().iter().zip(inc) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
