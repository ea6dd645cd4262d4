//! Scaling exponents of return series by DFA and DMA, and a shuffle test of
//! the weak-form efficiency hypothesis built on them.
//!
//! The pipeline is: prices → log returns → profile → fluctuation function
//! F(s) → log-log fit F(s) ~ s^H → comparison of H with exponents of
//! shuffled returns.

pub mod detrend;
pub mod error;
pub mod rolling;
pub mod scaling;
pub mod seed;
pub mod shuffletest;
pub mod stats;
pub mod synth;
pub mod timeseries;

pub use detrend::{default_scales, dfa_fluctuation, dma_fluctuation, DmaConfig, FluctuationFunction, Method, ScaleGrid};
pub use error::{Error, Result};
pub use rolling::{rolling_analysis, BandFlag, RollingConfig, WindowResult};
pub use scaling::{detect_scaling_range, exponent_relations, fit_power_law, ExponentRelations, RangePolicy, ScalingFit};
pub use shuffletest::{efficiency_test, shuffle, two_tailed_p, ShuffleTestResult, TestConfig};
pub use synth::{generate_fgn, FgnSpec};
pub use timeseries::{load_prices, log_returns, profile, split_by_dates, DateFormat, PriceSeries, Profile, ReturnSeries, SubseriesPreset};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
