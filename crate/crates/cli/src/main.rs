mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use effscan::detrend::DEFAULT_POINTS_PER_DECADE;
use effscan::scaling::DEFAULT_WINDOW_LEN;
use effscan::shuffletest::DEFAULT_REPLICATES;
use effscan::{DateFormat, Method, RangePolicy, SubseriesPreset};

use config::*;

/// Hurst exponents by DFA and DMA, and shuffle tests of weak-form efficiency.
#[derive(Debug, Parser)]
#[command(name = "effscan", version = effscan::VERSION)]
struct Cli {
    /// Worker threads; defaults to one per core. Never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fluctuation function and fitted exponent of one price file.
    Analyze(AnalyzeArgs),
    /// Shuffle test of the whole series or of date-delimited subseries.
    Test(TestArgs),
    /// Moving-window exponents with shuffled 95% bands.
    Rolling(RollingArgs),
    /// Fractional Gaussian noise, as raw values or as a price file.
    Synth(SynthArgs),
    /// Re-runs the configuration embedded in an earlier artifact.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// CSV of `date,price` records.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = DateFormatArg::Auto)]
    date_format: DateFormatArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DateFormatArg {
    Auto,
    Iso,
    Us,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum MethodKind {
    Dfa,
    Dma,
    Bdma,
    Cdma,
    Fdma,
}

#[derive(Debug, Args)]
struct MethodArgs {
    #[arg(long, value_enum, default_value_t = MethodKind::Dfa)]
    method: MethodKind,
    /// Detrending polynomial order for DFA.
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Window position for DMA: 0 backward, 0.5 centered, 1 forward.
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RangeKind {
    Full,
    Auto,
    Fixed,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Log-spaced scales per decade.
    #[arg(long = "points-per-decade", alias = "ppd", default_value_t = DEFAULT_POINTS_PER_DECADE)]
    points_per_decade: usize,
    /// Scaling range: every scale, the best sliding window, or [s-lo, s-hi].
    #[arg(long, value_enum, default_value_t = RangeKind::Full)]
    range: RangeKind,
    /// Grid points per window for `--range auto`.
    #[arg(long, default_value_t = DEFAULT_WINDOW_LEN)]
    window_len: usize,
    #[arg(long)]
    s_lo: Option<usize>,
    #[arg(long)]
    s_hi: Option<usize>,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Destination file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    method: MethodArgs,
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Also write the per-window fit residuals of the range search here.
    #[arg(long)]
    rss_profile: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    method: MethodArgs,
    /// Run BDMA, CDMA, FDMA and DFA (of `--order`) in one go.
    #[arg(long, conflicts_with_all = ["method", "theta"])]
    all_methods: bool,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    shuffles: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Split at a preset's event dates.
    #[arg(long, value_enum)]
    subseries: Option<SubseriesArg>,
    /// Comma-separated cut dates (YYYY-MM-DD); overrides the preset's dates.
    #[arg(long, value_delimiter = ',')]
    cuts: Vec<NaiveDate>,
    /// Keep every shuffled exponent in JSON output.
    #[arg(long)]
    include_ensemble: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SubseriesArg {
    GulfIraq,
    Nafta,
}

#[derive(Debug, Args)]
struct RollingArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long = "points-per-decade", alias = "ppd", default_value_t = DEFAULT_POINTS_PER_DECADE)]
    points_per_decade: usize,
    /// Returns per window.
    #[arg(long, default_value_t = 500)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    #[arg(long, default_value_t = DEFAULT_WINDOW_LEN)]
    window_len: usize,
    /// Shuffles per window.
    #[arg(long, default_value_t = 1000)]
    shuffles: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// No progress on stderr.
    #[arg(long, short)]
    quiet: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, short)]
    n: usize,
    #[arg(long)]
    hurst: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Emit a `date,price` file on consecutive days instead of raw values.
    #[arg(long)]
    as_prices: bool,
    #[arg(long, default_value = "2000-01-01")]
    start_date: NaiveDate,
    #[arg(long, default_value_t = 100.0)]
    start_price: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// CSV or JSON artifact written by an earlier run.
    artifact: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// No progress on stderr.
    #[arg(long, short)]
    quiet: bool,
}

impl InputArgs {
    fn spec(&self) -> InputSpec {
        let date_format = match self.date_format {
            DateFormatArg::Auto => DateFormat::Auto,
            DateFormatArg::Iso => DateFormat::Iso,
            DateFormatArg::Us => DateFormat::Us,
        };
        InputSpec { path: self.input.clone(), date_format }
    }
}

impl MethodArgs {
    fn resolve(&self) -> Result<Method> {
        if self.method != MethodKind::Dma && self.theta.is_some() {
            bail!("--theta only applies to --method dma");
        }
        let method = match self.method {
            MethodKind::Dfa => Method::Dfa { order: self.order },
            MethodKind::Dma => match self.theta {
                Some(theta) => Method::Dma { theta },
                None => bail!("--method dma needs --theta"),
            },
            MethodKind::Bdma => Method::BDMA,
            MethodKind::Cdma => Method::CDMA,
            MethodKind::Fdma => Method::FDMA,
        };
        method.validate()?;
        Ok(method)
    }
}

impl FitArgs {
    fn policy(&self) -> Result<RangePolicy> {
        match (self.range, self.s_lo, self.s_hi) {
            (RangeKind::Full, None, None) => Ok(RangePolicy::Full),
            (RangeKind::Auto, None, None) => Ok(RangePolicy::Auto { window_len: self.window_len }),
            (RangeKind::Fixed, Some(s_lo), Some(s_hi)) => Ok(RangePolicy::Fixed { s_lo, s_hi }),
            (RangeKind::Fixed, _, _) => bail!("--range fixed needs both --s-lo and --s-hi"),
            _ => bail!("--s-lo and --s-hi only apply to --range fixed"),
        }
    }

    fn spec(&self) -> Result<EstimatorSpec> {
        Ok(EstimatorSpec { points_per_decade: self.points_per_decade, range: self.policy()? })
    }
}

fn resolve(command: Command) -> Result<(RunConfig, Option<PathBuf>, commands::Extras)> {
    let mut extras = commands::Extras::default();
    let resolved = match command {
        Command::Analyze(a) => {
            extras.rss_profile = a.rss_profile;
            extras.window_len = a.fit.window_len;
            let cfg = AnalyzeConfig {
                input: a.input.spec(),
                method: a.method.resolve()?,
                estimator: a.fit.spec()?,
                format: a.out.format,
            };
            (RunConfig::Analyze(cfg), a.out.out)
        }
        Command::Test(t) => {
            let methods = if t.all_methods {
                vec![Method::BDMA, Method::CDMA, Method::FDMA, Method::Dfa { order: t.method.order }]
            } else {
                vec![t.method.resolve()?]
            };
            let subseries = t.subseries.map(|s| match s {
                SubseriesArg::GulfIraq => SubseriesPreset::GulfIraq,
                SubseriesArg::Nafta => SubseriesPreset::Nafta,
            });
            let cuts = match (subseries, t.cuts.is_empty()) {
                (Some(preset), true) => preset.default_cuts(),
                _ => t.cuts,
            };
            if t.shuffles == 0 {
                bail!("--shuffles must be at least 1");
            }
            let cfg = TestRunConfig {
                input: t.input.spec(),
                methods,
                estimator: t.fit.spec()?,
                shuffles: t.shuffles,
                seed: t.seed,
                subseries,
                cuts,
                include_ensemble: t.include_ensemble,
                format: t.out.format,
            };
            (RunConfig::Test(cfg), t.out.out)
        }
        Command::Rolling(r) => {
            extras.quiet = r.quiet;
            let cfg = RollingRunConfig {
                input: r.input.spec(),
                method: r.method.resolve()?,
                points_per_decade: r.points_per_decade,
                window: r.window,
                step: r.step,
                window_len: r.window_len,
                shuffles: r.shuffles,
                seed: r.seed,
                format: r.out.format,
            };
            (RunConfig::Rolling(cfg), r.out.out)
        }
        Command::Synth(s) => {
            let cfg = SynthRunConfig {
                n: s.n,
                hurst: s.hurst,
                sigma: s.sigma,
                seed: s.seed,
                prices: s.as_prices,
                start_date: s.start_date,
                start_price: s.start_price,
            };
            (RunConfig::Synth(cfg), s.out)
        }
        Command::Replay(r) => {
            extras.quiet = r.quiet;
            let cfg = output::embedded_config(&r.artifact)?;
            (cfg, r.out)
        }
    };
    Ok((resolved.0, resolved.1, extras))
}

fn run(cli: Cli) -> Result<()> {
    let (config, out, extras) = resolve(cli.command)?;
    let job = || commands::execute(&config, out.as_deref(), &extras);
    match cli.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building the worker pool")?
            .install(job),
        None => job(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
