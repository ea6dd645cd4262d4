//! Fully resolved run configuration, echoed into every artifact.

use std::path::PathBuf;

use chrono::NaiveDate;
use effscan::{DateFormat, Method, RangePolicy, SubseriesPreset};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub path: PathBuf,
    pub date_format: DateFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub points_per_decade: usize,
    pub range: RangePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub input: InputSpec,
    pub method: Method,
    pub estimator: EstimatorSpec,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRunConfig {
    pub input: InputSpec,
    pub methods: Vec<Method>,
    pub estimator: EstimatorSpec,
    pub shuffles: usize,
    pub seed: u64,
    pub subseries: Option<SubseriesPreset>,
    /// Resolved cut dates; empty for a whole-series test.
    pub cuts: Vec<NaiveDate>,
    pub include_ensemble: bool,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingRunConfig {
    pub input: InputSpec,
    pub method: Method,
    pub points_per_decade: usize,
    pub window: usize,
    pub step: usize,
    pub window_len: usize,
    pub shuffles: usize,
    pub seed: u64,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthRunConfig {
    pub n: usize,
    pub hurst: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Emit `date,price` rows instead of raw values.
    pub prices: bool,
    pub start_date: NaiveDate,
    pub start_price: f64,
}

/// Output path and thread count are deliberately absent: neither may change
/// the artifact bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum RunConfig {
    Analyze(AnalyzeConfig),
    Test(TestRunConfig),
    Rolling(RollingRunConfig),
    Synth(SynthRunConfig),
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Analyze(_) => "analyze",
            RunConfig::Test(_) => "test",
            RunConfig::Rolling(_) => "rolling",
            RunConfig::Synth(_) => "synth",
        }
    }

    pub fn schema(&self) -> String {
        format!("effscan.{}/{}", self.command(), SCHEMA_VERSION)
    }
}

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 20_121_002;
