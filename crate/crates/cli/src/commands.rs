use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{Context, Result};
use chrono::NaiveDate;
use effscan::rolling::to_csv as rolling_csv;
use effscan::scaling::{window_fits, window_fits_csv, DEFAULT_WINDOW_LEN};
use effscan::shuffletest::estimate;
use effscan::synth::synthetic_prices;
use effscan::timeseries::LoadedPrices;
use effscan::{
    default_scales, efficiency_test, exponent_relations, generate_fgn, load_prices, log_returns,
    rolling_analysis, split_by_dates, BandFlag, DateFormat, ExponentRelations, FgnSpec,
    FluctuationFunction, PriceSeries, RollingConfig, ScalingFit, ShuffleTestResult,
    TestConfig, WindowResult,
};
use serde::Serialize;

use crate::config::*;
use crate::output::{csv_preamble, emit, json_artifact};

/// Settings that shape side outputs or the terminal, not the artifact.
#[derive(Debug)]
pub struct Extras {
    pub rss_profile: Option<PathBuf>,
    pub window_len: usize,
    pub quiet: bool,
}

impl Default for Extras {
    fn default() -> Self {
        Self { rss_profile: None, window_len: DEFAULT_WINDOW_LEN, quiet: false }
    }
}

pub fn execute(config: &RunConfig, out: Option<&Path>, extras: &Extras) -> Result<()> {
    match config {
        RunConfig::Analyze(c) => analyze(config, c, out, extras),
        RunConfig::Test(c) => test(config, c, out),
        RunConfig::Rolling(c) => rolling(config, c, out, extras.quiet),
        RunConfig::Synth(c) => synth(config, c, out),
    }
}

#[derive(Debug, Serialize)]
struct Ingest {
    n_prices: usize,
    first_date: NaiveDate,
    last_date: NaiveDate,
    date_format: DateFormat,
    header_skipped: bool,
    dropped_lines: Vec<usize>,
}

fn load(spec: &InputSpec) -> Result<(PriceSeries, Ingest)> {
    let path = spec.path.display();
    let file = File::open(&spec.path).with_context(|| format!("opening {path}"))?;
    let LoadedPrices { series, date_format, header_skipped, dropped_lines } =
        load_prices(BufReader::new(file), spec.date_format).with_context(|| format!("loading {path}"))?;
    if !dropped_lines.is_empty() {
        let shown: Vec<String> = dropped_lines.iter().take(10).map(|l| l.to_string()).collect();
        let more = if dropped_lines.len() > 10 { ", ..." } else { "" };
        eprintln!(
            "warning: {path}: dropped {} record(s) with unusable prices (line {}{more})",
            dropped_lines.len(),
            shown.join(", ")
        );
    }
    let ingest = Ingest {
        n_prices: series.len(),
        first_date: series.first_date(),
        last_date: series.last_date(),
        date_format,
        header_skipped,
        dropped_lines,
    };
    Ok((series, ingest))
}

fn comment<T: Serialize>(key: &str, value: &T) -> Result<String> {
    Ok(format!("# {key}: {}\n", serde_json::to_string(value)?))
}

#[derive(Serialize)]
struct FitSummary<'a> {
    method: String,
    n_returns: usize,
    fit: &'a ScalingFit,
    relations: ExponentRelations,
}

#[derive(Serialize)]
struct AnalyzePayload<'a> {
    ingest: &'a Ingest,
    #[serde(flatten)]
    summary: FitSummary<'a>,
    fluctuation: &'a FluctuationFunction,
}

fn analyze(config: &RunConfig, c: &AnalyzeConfig, out: Option<&Path>, extras: &Extras) -> Result<()> {
    let (series, ingest) = load(&c.input)?;
    let returns = log_returns(&series)?;
    let grid = default_scales(returns.len(), c.estimator.points_per_decade)?;
    let est = estimate(returns.values(), c.method, &grid, c.estimator.range)?;
    let summary = FitSummary {
        method: c.method.to_string(),
        n_returns: returns.len(),
        fit: &est.fit,
        relations: exponent_relations(est.fit.hurst),
    };

    if let Some(path) = &extras.rss_profile {
        let fits = window_fits(&est.fluctuation, extras.window_len)?;
        emit(Some(path), &(csv_preamble(config)? + &window_fits_csv(&fits)))?;
    }

    let text = match c.format {
        OutputFormat::Json => json_artifact(
            config,
            &AnalyzePayload { ingest: &ingest, summary, fluctuation: &est.fluctuation },
        )?,
        OutputFormat::Csv => {
            csv_preamble(config)?
                + &comment("ingest", &ingest)?
                + &comment("fit", &summary)?
                + &est.fluctuation.to_csv()
        }
    };
    emit(out, &text)
}

#[derive(Serialize)]
struct Segment {
    label: String,
    start_date: NaiveDate,
    end_date: NaiveDate,
    n_returns: usize,
    results: Vec<ShuffleTestResult>,
}

#[derive(Serialize)]
struct TestPayload<'a> {
    ingest: &'a Ingest,
    segments: &'a [Segment],
}

fn segment_labels(c: &TestRunConfig) -> Vec<String> {
    if c.cuts.is_empty() {
        return vec!["whole".into()];
    }
    match c.subseries {
        Some(preset) if preset.segment_labels().len() == c.cuts.len() + 1 => {
            preset.segment_labels().iter().map(|s| s.to_string()).collect()
        }
        _ => (1..=c.cuts.len() + 1).map(|k| format!("seg{k}")).collect(),
    }
}

fn test(config: &RunConfig, c: &TestRunConfig, out: Option<&Path>) -> Result<()> {
    let (series, ingest) = load(&c.input)?;
    let parts = if c.cuts.is_empty() { vec![series] } else { split_by_dates(&series, &c.cuts)? };
    let mut segments = Vec::new();
    for (label, part) in segment_labels(c).into_iter().zip(parts) {
        let returns = log_returns(&part)?;
        let grid = default_scales(returns.len(), c.estimator.points_per_decade)
            .with_context(|| format!("segment {label}"))?;
        let mut results = Vec::new();
        for &method in &c.methods {
            let cfg = TestConfig {
                method,
                grid: grid.clone(),
                policy: c.estimator.range,
                n_replicates: c.shuffles,
                seed: c.seed,
            };
            let mut result = efficiency_test(returns.values(), &cfg)
                .with_context(|| format!("segment {label}, {method}"))?;
            result.label = format!("{label} {method}");
            if !c.include_ensemble {
                result = result.without_ensemble();
            }
            // the summary goes wherever the artifact does not
            if out.is_some() {
                println!("{result}");
            } else {
                eprintln!("{result}");
            }
            results.push(result);
        }
        segments.push(Segment {
            label,
            start_date: part.first_date(),
            end_date: part.last_date(),
            n_returns: returns.len(),
            results,
        });
    }

    let text = match c.format {
        OutputFormat::Json => json_artifact(config, &TestPayload { ingest: &ingest, segments: &segments })?,
        OutputFormat::Csv => {
            let mut body = csv_preamble(config)? + &comment("ingest", &ingest)?;
            body.push_str(
                "segment,start_date,end_date,n_returns,method,H,stderr,s_lo,s_hi,mean_hs,q025,q975,p,n_replicates,redraws,rejected\n",
            );
            for seg in &segments {
                for r in &seg.results {
                    body.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                        seg.label,
                        seg.start_date,
                        seg.end_date,
                        seg.n_returns,
                        r.method,
                        r.hurst,
                        r.fit.stderr,
                        r.range.0,
                        r.range.1,
                        r.mean_hs,
                        r.q025,
                        r.q975,
                        r.p,
                        r.n_replicates,
                        r.redraws,
                        r.rejected
                    ));
                }
            }
            body
        }
    };
    emit(out, &text)
}

#[derive(Serialize)]
struct RollingSummary {
    n_windows: usize,
    below: usize,
    inside: usize,
    above: usize,
    outside_fraction: f64,
    low_range: usize,
}

impl RollingSummary {
    fn of(windows: &[WindowResult]) -> Self {
        let count = |flag| windows.iter().filter(|w| w.flag == flag).count();
        let (below, above) = (count(BandFlag::Below), count(BandFlag::Above));
        let n = windows.len();
        Self {
            n_windows: n,
            below,
            inside: count(BandFlag::Inside),
            above,
            outside_fraction: if n == 0 { 0.0 } else { (below + above) as f64 / n as f64 },
            low_range: windows.iter().filter(|w| w.low_range).count(),
        }
    }
}

#[derive(Serialize)]
struct RollingPayload<'a> {
    ingest: &'a Ingest,
    summary: RollingSummary,
    windows: &'a [WindowResult],
}

fn rolling(config: &RunConfig, c: &RollingRunConfig, out: Option<&Path>, quiet: bool) -> Result<()> {
    let cfg = RollingConfig {
        window_size: c.window,
        step: c.step,
        method: c.method,
        n_shuffles: c.shuffles,
        window_len: c.window_len,
        points_per_decade: c.points_per_decade,
        seed: c.seed,
    };
    // reject a bad configuration before reading any data
    cfg.validate()?;
    let (series, ingest) = load(&c.input)?;

    let reported = AtomicUsize::new(0);
    let progress = |done: usize, total: usize| {
        let percent = done * 100 / total.max(1);
        if reported.fetch_max(percent + 1, Ordering::Relaxed) <= percent {
            eprint!("\rrolling: {done}/{total} windows ({percent}%)");
            if done == total {
                eprintln!();
            }
        }
    };
    let report: Option<&(dyn Fn(usize, usize) + Sync)> = if quiet { None } else { Some(&progress) };
    let windows = rolling_analysis(&series, &cfg, report)?;
    if !quiet && windows.is_empty() {
        eprintln!("rolling: no complete window");
    }

    let summary = RollingSummary::of(&windows);
    let text = match c.format {
        OutputFormat::Json => json_artifact(config, &RollingPayload { ingest: &ingest, summary, windows: &windows })?,
        OutputFormat::Csv => {
            csv_preamble(config)? + &comment("ingest", &ingest)? + &comment("summary", &summary)? + &rolling_csv(&windows)
        }
    };
    emit(out, &text)
}

fn synth(config: &RunConfig, c: &SynthRunConfig, out: Option<&Path>) -> Result<()> {
    let spec = FgnSpec { n: c.n, hurst: c.hurst, sigma: c.sigma, seed: c.seed };
    let values = generate_fgn(&spec)?;
    let mut text = csv_preamble(config)?;
    if c.prices {
        let prices = synthetic_prices(&values, c.start_date, c.start_price)?;
        text.push_str("date,price\n");
        for (d, p) in prices.dates().iter().zip(prices.prices()) {
            text.push_str(&format!("{d},{p}\n"));
        }
    } else {
        text.push_str("value\n");
        for v in &values {
            text.push_str(&format!("{v}\n"));
        }
    }
    emit(out, &text)
}
