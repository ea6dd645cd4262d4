//! Log-log power-law fits of F(s) ~ s^H and scaling-range selection.

use serde::{Deserialize, Serialize};

use crate::detrend::FluctuationFunction;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW_LEN: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    #[serde(rename = "H")]
    pub hurst: f64,
    pub stderr: f64,
    /// Inclusive `(s_lo, s_hi)`.
    pub range: (usize, usize),
    pub rss: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentRelations {
    #[serde(rename = "H")]
    pub hurst: f64,
    pub eta: f64,
    pub gamma: f64,
}

/// Spectral exponent `eta = 2H - 1` and autocorrelation exponent
/// `gamma = 2 - 2H`.
pub fn exponent_relations(hurst: f64) -> ExponentRelations {
    ExponentRelations {
        hurst,
        eta: 2.0 * hurst - 1.0,
        gamma: 2.0 - 2.0 * hurst,
    }
}

impl ExponentRelations {
    pub fn hurst_from_eta(eta: f64) -> f64 {
        (eta + 1.0) / 2.0
    }
}

/// How the fitted range is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RangePolicy {
    /// Every grid scale.
    #[default]
    Full,
    /// Minimal-rss sliding window of `window_len` grid points.
    Auto { window_len: usize },
    Fixed { s_lo: usize, s_hi: usize },
}

impl RangePolicy {
    pub fn resolve(&self, f: &FluctuationFunction) -> Result<(usize, usize)> {
        match *self {
            RangePolicy::Full => match (f.scales.first(), f.scales.last()) {
                (Some(&lo), Some(&hi)) => Ok((lo, hi)),
                _ => Err(Error::InsufficientData("empty fluctuation function".into())),
            },
            RangePolicy::Auto { window_len } => detect_scaling_range(f, window_len),
            RangePolicy::Fixed { s_lo, s_hi } if s_lo < s_hi => Ok((s_lo, s_hi)),
            RangePolicy::Fixed { s_lo, s_hi } => Err(Error::Config(format!(
                "fixed range needs s_lo < s_hi, got [{s_lo}, {s_hi}]"
            ))),
        }
    }
}

struct Ols {
    slope: f64,
    rss: f64,
    stderr: f64,
}

fn ols(x: &[f64], y: &[f64]) -> Ols {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    // undefined with zero degrees of freedom; reported as 0
    let stderr = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ols { slope, rss, stderr }
}

/// OLS of ln F on ln s over the grid points with `s_lo <= s <= s_hi`.
pub fn fit_power_law(f: &FluctuationFunction, range: (usize, usize)) -> Result<ScalingFit> {
    let (lo, hi) = range;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (s, v) in f.points().filter(|(s, _)| (lo..=hi).contains(s)) {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Degenerate(format!("F({s}) = {v} cannot be log-transformed")));
        }
        x.push((s as f64).ln());
        y.push(v.ln());
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} grid point(s) inside [{lo}, {hi}], need 2",
            x.len()
        )));
    }
    let fit = ols(&x, &y);
    let inside: Vec<usize> = f.scales.iter().copied().filter(|s| (lo..=hi).contains(s)).collect();
    Ok(ScalingFit {
        hurst: fit.slope,
        stderr: fit.stderr,
        range: (inside[0], inside[inside.len() - 1]),
        rss: fit.rss,
        n_points: x.len(),
    })
}

/// One candidate of the sliding-window range search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowFit {
    pub s_lo: usize,
    pub s_hi: usize,
    #[serde(rename = "H")]
    pub hurst: f64,
    pub rss: f64,
}

/// Every contiguous `window_len`-point window whose F values are all
/// positive, in grid order.
pub fn window_fits(f: &FluctuationFunction, window_len: usize) -> Result<Vec<WindowFit>> {
    if window_len < 2 {
        return Err(Error::Config(format!("window length must be at least 2, got {window_len}")));
    }
    let usable = f.values.iter().filter(|v| **v > 0.0 && v.is_finite()).count();
    if usable < window_len {
        return Err(Error::InsufficientData(format!(
            "{usable} usable grid point(s), the range search needs {window_len}"
        )));
    }
    let logs: Vec<Option<(f64, f64)>> = f
        .points()
        .map(|(s, v)| (v > 0.0 && v.is_finite()).then(|| ((s as f64).ln(), v.ln())))
        .collect();
    let mut fits = Vec::new();
    for start in 0..=f.len() - window_len {
        let Some(pts) = logs[start..start + window_len].iter().copied().collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let fit = ols(&x, &y);
        fits.push(WindowFit {
            s_lo: f.scales[start],
            s_hi: f.scales[start + window_len - 1],
            hurst: fit.slope,
            rss: fit.rss,
        });
    }
    if fits.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no run of {window_len} consecutive positive F values"
        )));
    }
    Ok(fits)
}

/// rss values this close are treated as equal, so the earlier window wins.
fn improves(candidate: f64, best: f64) -> bool {
    candidate < best - (1e-9 * best.abs() + 1e-24)
}

/// Minimal-rss window of exactly `window_len` grid points; the earliest
/// window wins ties.
pub fn detect_scaling_range(f: &FluctuationFunction, window_len: usize) -> Result<(usize, usize)> {
    let fits = window_fits(f, window_len)?;
    let mut best = fits[0];
    for w in &fits[1..] {
        if improves(w.rss, best.rss) {
            best = *w;
        }
    }
    Ok((best.s_lo, best.s_hi))
}

pub fn window_fits_csv(fits: &[WindowFit]) -> String {
    let mut out = String::from("s_lo,s_hi,H,rss\n");
    for w in fits {
        out.push_str(&format!("{},{},{},{}\n", w.s_lo, w.s_hi, w.hurst, w.rss));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detrend::Method;

    fn ff(scales: Vec<usize>, values: Vec<f64>) -> FluctuationFunction {
        FluctuationFunction { method: Method::DFA1, n: 10_000, scales, values }
    }

    fn grid(n: usize) -> Vec<usize> {
        (0..n).map(|k| (10.0 * 1.15f64.powi(k as i32)).round() as usize).collect()
    }

    #[test]
    fn exact_power_law() {
        let s = grid(30);
        let f = ff(s.clone(), s.iter().map(|v| *v as f64).collect());
        let fit = fit_power_law(&f, (s[0], s[29])).unwrap();
        assert!((fit.hurst - 1.0).abs() < 1e-12);
        assert!(fit.rss < 1e-25);
        assert_eq!(fit.n_points, 30);
        assert_eq!(fit.range, (s[0], s[29]));

        let f = ff(s.clone(), vec![3.0; 30]);
        let fit = fit_power_law(&f, (1, 10_000)).unwrap();
        assert!(fit.hurst.abs() < 1e-12);
        assert!(fit.rss < 1e-25);
        assert_eq!(fit.range, (s[0], s[29]));
    }

    #[test]
    fn fit_errors() {
        let f = ff(vec![10, 20, 40], vec![1.0, 0.0, 2.0]);
        assert!(matches!(fit_power_law(&f, (10, 40)), Err(Error::Degenerate(_))));
        // zero outside the range does not matter
        assert!(fit_power_law(&f, (30, 40)).is_err());
        let f = ff(vec![10, 20, 40], vec![1.0, 1.5, 2.0]);
        assert!(matches!(fit_power_law(&f, (15, 30)), Err(Error::InsufficientData(_))));
        let fit = fit_power_law(&f, (10, 20)).unwrap();
        assert_eq!(fit.stderr, 0.0);
    }

    #[test]
    fn stderr_matches_textbook_formula() {
        let s = vec![10, 20, 40, 80];
        let v = vec![1.0, 1.5, 2.1, 3.2];
        let fit = fit_power_law(&ff(s.clone(), v.clone()), (10, 80)).unwrap();
        let x: Vec<f64> = s.iter().map(|a| (*a as f64).ln()).collect();
        let mx = x.iter().sum::<f64>() / 4.0;
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let expected = (fit.rss / 2.0 / sxx).sqrt();
        assert!((fit.stderr - expected).abs() < 1e-15);
    }

    #[test]
    fn tie_break_picks_first_window() {
        let s = grid(40);
        let f = ff(s.clone(), s.iter().map(|v| (*v as f64).sqrt()).collect());
        let range = detect_scaling_range(&f, 15).unwrap();
        assert_eq!(range, (s[0], s[14]));
        let fit = fit_power_law(&f, range).unwrap();
        assert!((fit.hurst - 0.5).abs() < 1e-12);
    }

    #[test]
    fn crossover_window_stays_in_one_regime() {
        let mut s: Vec<usize> = (0..16).map(|k| 10 + k).collect(); // 10..=25
        s.extend((0..20).map(|k| 31 + 3 * k)); // 31..=88
        let v: Vec<f64> = s
            .iter()
            .map(|&x| {
                let x = x as f64;
                if x <= 30.0 { x } else { 30.0 * (x / 30.0).powf(0.2) }
            })
            .collect();
        let f = ff(s.clone(), v);
        let (lo, hi) = detect_scaling_range(&f, 15).unwrap();
        assert!(hi <= 30 || lo > 30, "window [{lo}, {hi}] straddles the crossover");
        assert_eq!((lo, hi), (10, 24));
    }

    #[test]
    fn search_needs_enough_points() {
        let s = grid(14);
        let f = ff(s.clone(), s.iter().map(|v| *v as f64).collect());
        assert!(matches!(detect_scaling_range(&f, 15), Err(Error::InsufficientData(_))));
        let mut v: Vec<f64> = grid(20).iter().map(|v| *v as f64).collect();
        v[7] = 0.0;
        v[14] = 0.0;
        let f = ff(grid(20), v);
        assert!(detect_scaling_range(&f, 15).is_err());
    }

    #[test]
    fn zero_points_are_skipped_by_the_search() {
        let s = grid(30);
        let mut v: Vec<f64> = s.iter().map(|x| (*x as f64).powf(0.7)).collect();
        v[2] = 0.0;
        let f = ff(s.clone(), v);
        let (lo, _) = detect_scaling_range(&f, 15).unwrap();
        assert_eq!(lo, s[3]);
    }

    #[test]
    fn relations() {
        let r = exponent_relations(0.5);
        assert_eq!((r.eta, r.gamma), (0.0, 1.0));
        let r = exponent_relations(1.0);
        assert_eq!((r.eta, r.gamma), (1.0, 0.0));
        let r = exponent_relations(0.75);
        assert_eq!((r.eta, r.gamma), (0.5, 0.5));
    }

    #[test]
    fn policies_resolve() {
        let s = grid(20);
        let f = ff(s.clone(), s.iter().map(|v| *v as f64).collect());
        assert_eq!(RangePolicy::Full.resolve(&f).unwrap(), (s[0], s[19]));
        assert_eq!(RangePolicy::Auto { window_len: 15 }.resolve(&f).unwrap(), (s[0], s[14]));
        assert!(RangePolicy::Fixed { s_lo: 50, s_hi: 20 }.resolve(&f).is_err());
        let json = serde_json::to_string(&RangePolicy::Auto { window_len: 15 }).unwrap();
        assert_eq!(json, r#"{"kind":"auto","window_len":15}"#);
    }

    #[test]
    fn window_fit_csv() {
        let s = grid(16);
        let f = ff(s.clone(), s.iter().map(|v| *v as f64).collect());
        let fits = window_fits(&f, 15).unwrap();
        assert_eq!(fits.len(), 2);
        let csv = window_fits_csv(&fits);
        assert!(csv.starts_with("s_lo,s_hi,H,rss\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
