//! Dated price input, log returns, the profile, and event-date splitting.

use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dated, strictly positive price observations in ascending date order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::Data(format!(
                "{} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if dates.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a price series needs at least 2 observations, got {}",
                dates.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Data(format!(
                "dates must be strictly increasing: {} is followed by {}",
                w[0], w[1]
            )));
        }
        if let Some((i, p)) = prices
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p > 0.0))
        {
            return Err(Error::Data(format!(
                "price {p} on {} is not a positive finite number",
                dates[i]
            )));
        }
        Ok(Self { dates, prices })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last_date(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    /// Observations dated strictly before `date`.
    pub fn truncate_before(&self, date: NaiveDate) -> Result<Self> {
        let end = self.dates.partition_point(|d| *d < date);
        Self::new(self.dates[..end].to_vec(), self.prices[..end].to_vec())
    }
}

/// Log returns; `dates[t]` is the date of the later of the two prices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::Data(format!(
                "{} dates but {} returns",
                dates.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("returns must be finite".into()));
        }
        Ok(Self { dates, values })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Cumulative sum of demeaned increments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    values: Vec<f64>,
}

impl Profile {
    pub fn from_increments(increments: &[f64]) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::InsufficientData(
                "cannot build a profile from an empty series".into(),
            ));
        }
        let mean = increments.iter().sum::<f64>() / increments.len() as f64;
        let values = increments
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r - mean;
                Some(*acc)
            })
            .collect();
        Ok(Self { values })
    }

    /// Wraps an already-integrated series, e.g. a synthetic trend.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("empty profile".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("profile values must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DateFormat {
    #[default]
    Auto,
    /// `YYYY-MM-DD`
    Iso,
    /// `MM/DD/YYYY`
    Us,
}

impl DateFormat {
    fn pattern(self) -> &'static str {
        match self {
            DateFormat::Iso => "%Y-%m-%d",
            DateFormat::Us => "%m/%d/%Y",
            DateFormat::Auto => unreachable!("auto has no single pattern"),
        }
    }

    fn parse(self, field: &str) -> Option<NaiveDate> {
        match self {
            DateFormat::Auto => DateFormat::Iso
                .parse(field)
                .or_else(|| DateFormat::Us.parse(field)),
            fmt => NaiveDate::parse_from_str(field, fmt.pattern()).ok(),
        }
    }

    fn detect(field: &str) -> Option<(Self, NaiveDate)> {
        [DateFormat::Iso, DateFormat::Us]
            .into_iter()
            .find_map(|fmt| fmt.parse(field).map(|d| (fmt, d)))
    }
}

/// Outcome of [`load_prices`], including what the cleaning rule dropped.
#[derive(Debug, Clone)]
pub struct LoadedPrices {
    pub series: PriceSeries,
    pub date_format: DateFormat,
    pub header_skipped: bool,
    /// 1-based line numbers of records dropped for a missing, non-numeric
    /// or non-positive price.
    pub dropped_lines: Vec<usize>,
}

impl LoadedPrices {
    pub fn dropped(&self) -> usize {
        self.dropped_lines.len()
    }
}

/// Parses `date,price` records. Lines starting with `#` and blank lines are
/// ignored; a header is accepted on the first record only.
pub fn load_prices<R: Read>(source: R, format: DateFormat) -> Result<LoadedPrices> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut detected = match format {
        DateFormat::Auto => None,
        fmt => Some(fmt),
    };
    let mut header_skipped = false;
    let mut seen_record = false;
    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    let mut dropped_lines = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| Error::Format {
            line: e.position().map_or(1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let date_field = record.get(0).unwrap_or("");
        if record.iter().all(str::is_empty) {
            continue;
        }
        let first = !seen_record;
        seen_record = true;

        let date = match detected {
            Some(fmt) => fmt.parse(date_field),
            None => DateFormat::detect(date_field).map(|(fmt, d)| {
                detected = Some(fmt);
                d
            }),
        };
        let date = match date {
            Some(d) => d,
            None if first => {
                header_skipped = true;
                continue;
            }
            None => {
                return Err(Error::Format {
                    line,
                    message: format!("unparseable date {date_field:?}"),
                })
            }
        };

        match record.get(1).and_then(|f| f.parse::<f64>().ok()) {
            Some(p) if p.is_finite() && p > 0.0 => rows.push((date, p)),
            _ => dropped_lines.push(line),
        }
    }

    if rows.is_empty() && dropped_lines.is_empty() {
        return Err(Error::Format {
            line: 1,
            message: "no date,price records found".into(),
        });
    }

    rows.sort_by_key(|(d, _)| *d);
    let mut duplicates: Vec<NaiveDate> = rows
        .windows(2)
        .filter(|w| w[0].0 == w[1].0)
        .map(|w| w[0].0)
        .collect();
    duplicates.dedup();
    if !duplicates.is_empty() {
        let listed: Vec<String> = duplicates.iter().map(ToString::to_string).collect();
        return Err(Error::Data(format!("duplicate dates: {}", listed.join(", "))));
    }

    let (dates, prices) = rows.into_iter().unzip();
    Ok(LoadedPrices {
        series: PriceSeries::new(dates, prices)?,
        date_format: detected.unwrap_or(DateFormat::Iso),
        header_skipped,
        dropped_lines,
    })
}

pub fn log_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    if p.len() < 2 {
        return Err(Error::InsufficientData(
            "log returns need at least 2 prices".into(),
        ));
    }
    let values = p.prices.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    ReturnSeries::new(p.dates[1..].to_vec(), values)
}

pub fn profile(r: &ReturnSeries) -> Result<Profile> {
    Profile::from_increments(&r.values)
}

/// Splits at each cut date; an observation dated on a cut starts the next
/// segment.
pub fn split_by_dates(p: &PriceSeries, cuts: &[NaiveDate]) -> Result<Vec<PriceSeries>> {
    if let Some(w) = cuts.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "cut dates must be strictly increasing: {} then {}",
            w[0], w[1]
        )));
    }
    let (first, last) = (p.first_date(), p.last_date());
    if let Some(c) = cuts.iter().find(|c| **c <= first || **c >= last) {
        return Err(Error::Range(format!(
            "cut date {c} is not strictly inside the series span {first}..{last}"
        )));
    }

    let mut bounds = vec![0];
    bounds.extend(cuts.iter().map(|c| p.dates.partition_point(|d| d < c)));
    bounds.push(p.len());
    bounds
        .windows(2)
        .map(|w| {
            PriceSeries::new(
                p.dates[w[0]..w[1]].to_vec(),
                p.prices[w[0]..w[1]].to_vec(),
            )
            .map_err(|e| match e {
                Error::InsufficientData(m) => Error::InsufficientData(format!(
                    "segment starting at index {}: {m}",
                    w[0]
                )),
                other => other,
            })
        })
        .collect()
}

/// Named event splits used in the crude-oil study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubseriesPreset {
    /// Gulf War outbreak and Iraq War outbreak: three segments.
    GulfIraq,
    /// NAFTA signing: two segments.
    Nafta,
}

impl SubseriesPreset {
    pub fn default_cuts(self) -> Vec<NaiveDate> {
        let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).expect("valid preset date");
        match self {
            SubseriesPreset::GulfIraq => vec![d(1990, 8, 2), d(2003, 3, 20)],
            SubseriesPreset::Nafta => vec![d(1994, 1, 1)],
        }
    }

    /// Labels matching the sub-series numbering of the study (1-3 and 4-5).
    pub fn segment_labels(self) -> &'static [&'static str] {
        match self {
            SubseriesPreset::GulfIraq => &["sub1", "sub2", "sub3"],
            SubseriesPreset::Nafta => &["sub4", "sub5"],
        }
    }
}
