//! Estimate-and-test in moving windows of returns.

use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detrend::{default_scales, Method, ScaleGrid, DEFAULT_POINTS_PER_DECADE};
use crate::error::{Error, Result};
use crate::scaling::{RangePolicy, DEFAULT_WINDOW_LEN};
use crate::seed::derive_seed;
use crate::shuffletest::{estimate, shuffled_ensemble};
use crate::stats::{mean, quantile_sorted, sorted};
use crate::timeseries::{log_returns, PriceSeries, ReturnSeries};

/// Windows whose selected range ends below this scale get `low_range`.
pub const LOW_RANGE_SCALE: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    pub window_size: usize,
    pub step: usize,
    pub method: Method,
    pub n_shuffles: usize,
    pub window_len: usize,
    pub points_per_decade: usize,
    pub seed: u64,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            window_size: 500,
            step: 1,
            method: Method::DFA1,
            n_shuffles: 1000,
            window_len: DEFAULT_WINDOW_LEN,
            points_per_decade: DEFAULT_POINTS_PER_DECADE,
            seed: 0,
        }
    }
}

impl RollingConfig {
    /// Checks everything that can be checked before touching the data and
    /// returns the per-window scale grid.
    pub fn validate(&self) -> Result<ScaleGrid> {
        self.method.validate()?;
        if self.step == 0 {
            return Err(Error::Config("window step must be at least 1".into()));
        }
        if self.n_shuffles == 0 {
            return Err(Error::Config("at least one shuffle per window is required".into()));
        }
        let grid = default_scales(self.window_size, self.points_per_decade).map_err(|e| {
            Error::Config(format!("window size {} is too small: {e}", self.window_size))
        })?;
        if grid.len() < self.window_len {
            return Err(Error::Config(format!(
                "window size {} gives {} scales, fewer than the fitting window of {}",
                self.window_size,
                grid.len(),
                self.window_len
            )));
        }
        if grid.scales()[0] < self.method.min_scale() {
            return Err(Error::Config(format!("{} cannot use scale {}", self.method, grid.scales()[0])));
        }
        Ok(grid)
    }

    pub fn window_count(&self, n_returns: usize) -> usize {
        if n_returns < self.window_size {
            0
        } else {
            (n_returns - self.window_size) / self.step + 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandFlag {
    Below,
    Inside,
    Above,
}

impl BandFlag {
    pub fn classify(hurst: f64, q025: f64, q975: f64) -> Self {
        if hurst < q025 {
            BandFlag::Below
        } else if hurst > q975 {
            BandFlag::Above
        } else {
            BandFlag::Inside
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BandFlag::Below => "below",
            BandFlag::Inside => "inside",
            BandFlag::Above => "above",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowResult {
    /// Index of the window's first return.
    pub start: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    #[serde(rename = "H")]
    pub hurst: f64,
    pub mean_hs: f64,
    pub q025: f64,
    pub q975: f64,
    pub range: (usize, usize),
    pub flag: BandFlag,
    /// The selected range lies entirely below [`LOW_RANGE_SCALE`].
    pub low_range: bool,
}

/// One window of `cfg.window_size` returns starting at `start`. Depends only
/// on those returns, `start` and the base seed.
pub fn analyze_window(
    returns: &ReturnSeries,
    start: usize,
    cfg: &RollingConfig,
    grid: &ScaleGrid,
) -> Result<WindowResult> {
    let end = start + cfg.window_size;
    if end > returns.len() {
        return Err(Error::Range(format!(
            "window [{start}, {end}) exceeds {} returns",
            returns.len()
        )));
    }
    let values = &returns.values()[start..end];
    let policy = RangePolicy::Auto { window_len: cfg.window_len };
    let original = estimate(values, cfg.method, grid, policy).map_err(|e| window_error(returns, start, e))?;
    let range = original.fit.range;
    let seed = derive_seed(cfg.seed, &[start as u64]);
    let ensemble = shuffled_ensemble(values, cfg.method, grid, range, cfg.n_shuffles, seed)
        .map_err(|e| window_error(returns, start, e))?;
    let order = sorted(&ensemble.values);
    let (q025, q975) = (quantile_sorted(&order, 0.025), quantile_sorted(&order, 0.975));
    let hurst = original.fit.hurst;
    Ok(WindowResult {
        start,
        start_date: returns.dates()[start],
        end_date: returns.dates()[end - 1],
        hurst,
        mean_hs: mean(&ensemble.values),
        q025,
        q975,
        range,
        flag: BandFlag::classify(hurst, q025, q975),
        low_range: range.1 < LOW_RANGE_SCALE,
    })
}

fn window_error(returns: &ReturnSeries, start: usize, e: Error) -> Error {
    let date = returns.dates()[start];
    match e {
        Error::Degenerate(m) => Error::Degenerate(format!("window starting {date}: {m}")),
        Error::InsufficientData(m) => Error::InsufficientData(format!("window starting {date}: {m}")),
        other => other,
    }
}

/// All windows in order. `progress(done, total)` is called as windows
/// finish, from worker threads.
pub fn rolling_analysis(
    prices: &PriceSeries,
    cfg: &RollingConfig,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
) -> Result<Vec<WindowResult>> {
    let grid = cfg.validate()?;
    if prices.len() < cfg.window_size + 1 {
        return Err(Error::Config(format!(
            "window size {} needs at least {} prices, the series has {}",
            cfg.window_size,
            cfg.window_size + 1,
            prices.len()
        )));
    }
    let returns = log_returns(prices)?;
    let total = cfg.window_count(returns.len());
    let done = AtomicUsize::new(0);
    (0..total)
        .into_par_iter()
        .map(|k| {
            let result = analyze_window(&returns, k * cfg.step, cfg, &grid);
            let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
            if let Some(report) = progress {
                report(finished, total);
            }
            result
        })
        .collect()
}

pub const CSV_HEADER: &str = "end_date,H,q025,q975,flag,s_lo,s_hi";

pub fn to_csv(windows: &[WindowResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for w in windows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            w.end_date,
            w.hurst,
            w.q025,
            w.q975,
            w.flag.as_str(),
            w.range.0,
            w.range.1
        ));
    }
    out
}
