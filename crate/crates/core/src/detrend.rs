//! Fluctuation functions F(s) by detrending moving average (DMA) and
//! detrended fluctuation analysis (DFA).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::Profile;

/// Smallest scale in the default grid.
pub const GRID_MIN_SCALE: usize = 10;
/// Minimum number of distinct scales a usable grid must contain.
pub const GRID_MIN_POINTS: usize = 16;
pub const DEFAULT_POINTS_PER_DECADE: usize = 20;

/// Strictly increasing box sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScaleGrid {
    scales: Vec<usize>,
}

impl ScaleGrid {
    pub fn new(scales: Vec<usize>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::Config("scale grid is empty".into()));
        }
        if scales[0] < 2 {
            return Err(Error::Config(format!(
                "scales must be at least 2, got {}",
                scales[0]
            )));
        }
        if let Some(w) = scales.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "scales must be strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { scales })
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn max_scale(&self) -> usize {
        *self.scales.last().expect("grid is never empty")
    }

    /// Sub-grid of scales within `lo..=hi`.
    pub fn restrict(&self, lo: usize, hi: usize) -> Result<Self> {
        let scales: Vec<usize> = self
            .scales
            .iter()
            .copied()
            .filter(|s| (lo..=hi).contains(s))
            .collect();
        if scales.is_empty() {
            return Err(Error::Range(format!("no grid scales inside [{lo}, {hi}]")));
        }
        Self::new(scales)
    }
}

/// Log-spaced integer scales from 10 to `n / 10`.
///
/// The number of points is `ceil(points_per_decade * decades) + 1`, raised to
/// [`GRID_MIN_POINTS`] when the span is short, so that a 15-point scaling
/// range search always has room to slide.
pub fn default_scales(n: usize, points_per_decade: usize) -> Result<ScaleGrid> {
    if points_per_decade == 0 {
        return Err(Error::Config("points per decade must be positive".into()));
    }
    let max = n / 10;
    if n < 40 || max <= GRID_MIN_SCALE {
        return Err(Error::InsufficientData(format!(
            "series of length {n} is too short for a scale grid (need at least {GRID_MIN_POINTS} scales in [{GRID_MIN_SCALE}, n/10])"
        )));
    }
    let ratio = max as f64 / GRID_MIN_SCALE as f64;
    let by_density = (points_per_decade as f64 * ratio.log10()).ceil() as usize + 1;
    let points = by_density.max(GRID_MIN_POINTS);

    let mut scales: Vec<usize> = (0..points)
        .map(|k| {
            let t = k as f64 / (points - 1) as f64;
            ((GRID_MIN_SCALE as f64) * ratio.powf(t)).round() as usize
        })
        .map(|s| s.clamp(GRID_MIN_SCALE, max))
        .collect();
    scales.dedup();
    if scales.len() < GRID_MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "series of length {n} yields only {} distinct scales in [{GRID_MIN_SCALE}, {max}], need {GRID_MIN_POINTS}",
            scales.len()
        )));
    }
    ScaleGrid::new(scales)
}

/// Position parameter of the moving-average window: 0 backward, 0.5
/// centered, 1 forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmaConfig {
    theta: f64,
}

impl DmaConfig {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Config(format!("theta must lie in [0, 1], got {theta}")));
        }
        Ok(Self { theta })
    }

    pub fn backward() -> Self {
        Self { theta: 0.0 }
    }

    pub fn centered() -> Self {
        Self { theta: 0.5 }
    }

    pub fn forward() -> Self {
        Self { theta: 1.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `(past, future)` point counts of the averaging window for scale `s`.
    pub fn window_split(&self, s: usize) -> (usize, usize) {
        let future = ((s - 1) as f64 * self.theta).floor() as usize;
        (s - 1 - future, future)
    }
}

/// Which detrending estimator to run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Method {
    Dma { theta: f64 },
    Dfa { order: usize },
}

impl Method {
    pub const BDMA: Method = Method::Dma { theta: 0.0 };
    pub const CDMA: Method = Method::Dma { theta: 0.5 };
    pub const FDMA: Method = Method::Dma { theta: 1.0 };
    pub const DFA1: Method = Method::Dfa { order: 1 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            Method::Dma { theta } => DmaConfig::new(theta).map(|_| ()),
            Method::Dfa { order } if order >= 1 => Ok(()),
            Method::Dfa { order } => Err(Error::Config(format!(
                "DFA order must be at least 1, got {order}"
            ))),
        }
    }

    pub fn min_scale(&self) -> usize {
        match *self {
            Method::Dma { .. } => 2,
            Method::Dfa { order } => order + 2,
        }
    }

    pub fn fluctuation(&self, profile: &Profile, grid: &ScaleGrid) -> Result<FluctuationFunction> {
        match *self {
            Method::Dma { theta } => dma_fluctuation(profile, grid, DmaConfig::new(theta)?),
            Method::Dfa { order } => dfa_fluctuation(profile, grid, order),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Method::Dma { theta: 0.0 } => f.write_str("BDMA"),
            Method::Dma { theta: 0.5 } => f.write_str("CDMA"),
            Method::Dma { theta: 1.0 } => f.write_str("FDMA"),
            Method::Dma { theta } => write!(f, "DMA(theta={theta})"),
            Method::Dfa { order } => write!(f, "DFA-{order}"),
        }
    }
}

/// Sampled F(s) for one profile and one estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationFunction {
    pub method: Method,
    /// Length of the source profile.
    pub n: usize,
    pub scales: Vec<usize>,
    #[serde(rename = "F")]
    pub values: Vec<f64>,
}

impl FluctuationFunction {
    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.scales.iter().copied().zip(self.values.iter().copied())
    }

    /// `s,F` table with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,F\n");
        for (s, f) in self.points() {
            out.push_str(&format!("{s},{f}\n"));
        }
        out
    }
}

fn check_grid(profile: &Profile, grid: &ScaleGrid, min_scale: usize) -> Result<()> {
    let n = profile.len();
    if let Some(s) = grid.scales().iter().find(|s| **s > n) {
        return Err(Error::Range(format!(
            "scale {s} exceeds the series length {n}"
        )));
    }
    if grid.scales()[0] < min_scale {
        return Err(Error::Range(format!(
            "scale {} is below the minimum {min_scale} for this method",
            grid.scales()[0]
        )));
    }
    Ok(())
}

/// Moving-average residual RMS over every index whose averaging window lies
/// entirely inside the profile.
pub fn dma_fluctuation(
    profile: &Profile,
    grid: &ScaleGrid,
    cfg: DmaConfig,
) -> Result<FluctuationFunction> {
    check_grid(profile, grid, 2)?;
    let y = profile.values();
    let n = y.len();

    // prefix[i] = y[0] + ... + y[i - 1]
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in y {
        acc += v;
        prefix.push(acc);
    }

    let values = grid
        .scales()
        .iter()
        .map(|&s| {
            let (past, future) = cfg.window_split(s);
            let inv_s = 1.0 / s as f64;
            let mut sum_sq = 0.0;
            for i in past..n - future {
                let trend = (prefix[i + future + 1] - prefix[i - past]) * inv_s;
                let eps = y[i] - trend;
                sum_sq += eps * eps;
            }
            (sum_sq / (n - s + 1) as f64).sqrt()
        })
        .collect();

    Ok(FluctuationFunction {
        method: Method::Dma { theta: cfg.theta() },
        n,
        scales: grid.scales().to_vec(),
        values,
    })
}

/// Orthonormal polynomial basis (degrees 0..=order) on the points 0..s.
fn poly_basis(s: usize, order: usize) -> Vec<Vec<f64>> {
    let half = (s - 1) as f64 / 2.0;
    let x: Vec<f64> = (0..s).map(|j| (j as f64 - half) / half.max(1.0)).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
    for degree in 0..=order {
        let mut v: Vec<f64> = x.iter().map(|xi| xi.powi(degree as i32)).collect();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let proj: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    basis
}

fn box_residual_sq(segment: &[f64], basis: &[Vec<f64>], coeffs: &mut [f64]) -> f64 {
    for (c, q) in coeffs.iter_mut().zip(basis) {
        *c = segment.iter().zip(q).map(|(a, b)| a * b).sum();
    }
    segment
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let trend: f64 = coeffs.iter().zip(basis).map(|(c, q)| c * q[j]).sum();
            let r = v - trend;
            r * r
        })
        .sum()
}

/// Polynomial detrending in non-overlapping boxes of size s, taken once from
/// the start and once from the end of the profile (2 * floor(N/s) boxes).
pub fn dfa_fluctuation(profile: &Profile, grid: &ScaleGrid, order: usize) -> Result<FluctuationFunction> {
    Method::Dfa { order }.validate()?;
    check_grid(profile, grid, order + 2)?;
    let y = profile.values();
    let n = y.len();
    let mut coeffs = vec![0.0; order + 1];

    let values = grid
        .scales()
        .iter()
        .map(|&s| {
            let basis = poly_basis(s, order);
            let boxes = n / s;
            let mut sum_sq = 0.0;
            for b in 0..boxes {
                sum_sq += box_residual_sq(&y[b * s..(b + 1) * s], &basis, &mut coeffs);
            }
            for b in 0..boxes {
                let start = n - (b + 1) * s;
                sum_sq += box_residual_sq(&y[start..start + s], &basis, &mut coeffs);
            }
            (sum_sq / (2 * boxes * s) as f64).sqrt()
        })
        .collect();

    Ok(FluctuationFunction {
        method: Method::Dfa { order },
        n,
        scales: grid.scales().to_vec(),
        values,
    })
}
