//! Price series ingestion and the elementary transforms the rest of the
//! crate consumes: log-returns, yearly volatility, fixed-size windows,
//! calendar-year partitions and time reversal.
//!
//! Visibility construction only ever looks at index order. Timestamps are
//! kept so observations can be bucketed into UTC calendar years.

use std::collections::BTreeMap;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime};

use crate::error::{Error, Result};

/// An ordered sequence of finite observations for one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    entity_id: String,
    values: Vec<f64>,
    timestamps: Option<Vec<i64>>,
}

impl TimeSeries {
    /// Builds a series of arbitrary finite values (log-prices, synthetic
    /// walks, ...). Timestamps, if given, are epoch seconds and must be
    /// strictly increasing.
    pub fn new(
        entity_id: impl Into<String>,
        values: Vec<f64>,
        timestamps: Option<Vec<i64>>,
    ) -> Result<Self> {
        let entity_id = entity_id.into();
        if values.is_empty() {
            return Err(Error::EmptySeries(entity_id));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value {} at index {pos}",
                values[pos]
            )));
        }
        if let Some(ts) = &timestamps {
            if ts.len() != values.len() {
                return Err(Error::Size(format!(
                    "{} timestamps for {} values",
                    ts.len(),
                    values.len()
                )));
            }
            if let Some(w) = ts.windows(2).position(|w| w[1] <= w[0]) {
                return Err(Error::Domain(format!(
                    "timestamps not strictly increasing at index {}",
                    w + 1
                )));
            }
        }
        Ok(Self {
            entity_id,
            values,
            timestamps,
        })
    }

    /// Like [`TimeSeries::new`] but additionally requires every value to be
    /// strictly positive, as prices are.
    pub fn prices(
        entity_id: impl Into<String>,
        values: Vec<f64>,
        timestamps: Option<Vec<i64>>,
    ) -> Result<Self> {
        if let Some(pos) = values.iter().position(|&v| v <= 0.0) {
            return Err(Error::Domain(format!(
                "non-positive price {} at index {pos}",
                values[pos]
            )));
        }
        Self::new(entity_id, values, timestamps)
    }

    pub fn entity_id(&self) -> &str {
        &self.entity_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[i64]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Natural-log returns `ln(x[t+1] / x[t])`; one shorter than its source.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub entity_id: String,
    pub values: Vec<f64>,
}

/// A contiguous, non-empty view `[start, end)` into a parent series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<'a> {
    values: &'a [f64],
    start: usize,
}

impl<'a> Window<'a> {
    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.start + self.values.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Column layout of the long-format price CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub entity_column: String,
    /// `None` ingests series without timestamps.
    pub timestamp_column: Option<String>,
    pub price_column: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            entity_column: "entity".into(),
            timestamp_column: Some("timestamp".into()),
            price_column: "price".into(),
        }
    }
}

/// Result of [`parse_price_csv`]: one series per entity plus the number of
/// rows that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPrices {
    pub series: BTreeMap<String, TimeSeries>,
    pub dropped_rows: usize,
}

/// Parses a timestamp given either as integer epoch seconds or as ISO-8601
/// (RFC 3339, a naive date-time taken as UTC, or a bare date).
pub fn parse_timestamp(field: &str) -> Option<i64> {
    let field = field.trim();
    if field.is_empty() {
        return None;
    }
    if let Ok(secs) = field.parse::<i64>() {
        return Some(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(field) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(field, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(field, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

/// UTC calendar year of an epoch-seconds instant.
pub fn utc_year(epoch_secs: i64) -> Result<i32> {
    DateTime::from_timestamp(epoch_secs, 0)
        .map(|dt| dt.year())
        .ok_or_else(|| Error::Domain(format!("timestamp {epoch_secs} out of range")))
}

#[derive(Default)]
struct Rows {
    values: Vec<f64>,
    timestamps: Vec<i64>,
}

/// Reads long-format `entity,timestamp,price` text.
///
/// Rows with a missing, unparsable or non-positive price are skipped and
/// counted, as are rows with a missing timestamp or one that does not
/// strictly follow the entity's previous retained timestamp. Nothing is
/// interpolated.
pub fn parse_price_csv(text: &str, options: &CsvOptions) -> Result<ParsedPrices> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("unreadable header: {e}")))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("header has no `{name}` column")))
    };
    let entity_col = column(&options.entity_column)?;
    let price_col = column(&options.price_column)?;
    let ts_col = options
        .timestamp_column
        .as_deref()
        .map(column)
        .transpose()?;

    let mut groups: BTreeMap<String, Rows> = BTreeMap::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let Some(entity) = record.get(entity_col).filter(|e| !e.is_empty()) else {
            dropped += 1;
            continue;
        };
        let rows = groups.entry(entity.to_string()).or_default();
        let price = record
            .get(price_col)
            .and_then(|p| p.parse::<f64>().ok())
            .filter(|p| p.is_finite() && *p > 0.0);
        let Some(price) = price else {
            dropped += 1;
            continue;
        };
        if let Some(col) = ts_col {
            let ts = record.get(col).and_then(parse_timestamp);
            match ts {
                Some(ts) if rows.timestamps.last().is_none_or(|&last| ts > last) => {
                    rows.timestamps.push(ts);
                }
                _ => {
                    dropped += 1;
                    continue;
                }
            }
        }
        rows.values.push(price);
    }

    let mut series = BTreeMap::new();
    for (entity, rows) in groups {
        if rows.values.is_empty() {
            return Err(Error::EmptySeries(entity));
        }
        let ts = ts_col.map(|_| rows.timestamps);
        let s = TimeSeries::prices(entity.clone(), rows.values, ts)?;
        series.insert(entity, s);
    }
    Ok(ParsedPrices {
        series,
        dropped_rows: dropped,
    })
}

/// Writes series back out in the long format read by [`parse_price_csv`].
/// Series without timestamps get their index as timestamp.
pub fn write_price_csv<'a, I>(series: I, options: &CsvOptions) -> Result<String>
where
    I: IntoIterator<Item = &'a TimeSeries>,
{
    let mut writer = csv::WriterBuilder::new()
        .delimiter(options.delimiter)
        .from_writer(Vec::new());
    let ts_name = options.timestamp_column.as_deref().unwrap_or("timestamp");
    writer.write_record([
        options.entity_column.as_str(),
        ts_name,
        options.price_column.as_str(),
    ])?;
    for s in series {
        for (i, v) in s.values().iter().enumerate() {
            let ts = s.timestamps().map_or(i as i64, |ts| ts[i]);
            writer.write_record([s.entity_id(), &ts.to_string(), &v.to_string()])?;
        }
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

fn log_returns_of(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::Size(format!(
            "log-returns need at least 2 values, got {}",
            values.len()
        )));
    }
    if let Some(pos) = values.iter().position(|&v| v <= 0.0) {
        return Err(Error::Domain(format!(
            "log-returns need positive values; got {} at index {pos}",
            values[pos]
        )));
    }
    Ok(values.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

pub fn log_returns(s: &TimeSeries) -> Result<ReturnSeries> {
    Ok(ReturnSeries {
        entity_id: s.entity_id.clone(),
        values: log_returns_of(&s.values)?,
    })
}

/// Sample (N-1) standard deviation of the log-returns between consecutive
/// observations that fall in `year` (UTC). No annualization factor.
pub fn annualized_volatility(s: &TimeSeries, year: i32) -> Result<f64> {
    let ts = s
        .timestamps()
        .ok_or_else(|| Error::Config("volatility by year needs timestamps".into()))?;
    let mut in_year = Vec::new();
    for (&t, &v) in ts.iter().zip(&s.values) {
        if utc_year(t)? == year {
            in_year.push(v);
        }
    }
    if in_year.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} observations of `{}` in {year}, need at least 3",
            in_year.len(),
            s.entity_id
        )));
    }
    let r = log_returns_of(&in_year)?;
    Ok(sample_std(&r))
}

pub(crate) fn sample_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Splits `values` into `floor(N / n)` consecutive non-overlapping windows,
/// discarding the trailing remainder.
pub fn windows_of(values: &[f64], n: usize) -> Result<Vec<Window<'_>>> {
    if n < 2 {
        return Err(Error::Size(format!("window size must be >= 2, got {n}")));
    }
    Ok(values
        .chunks_exact(n)
        .enumerate()
        .map(|(i, chunk)| Window {
            values: chunk,
            start: i * n,
        })
        .collect())
}

pub fn partition_windows(s: &TimeSeries, n: usize) -> Result<Vec<Window<'_>>> {
    windows_of(&s.values, n)
}

/// Groups observations by UTC calendar year, preserving order.
pub fn partition_years(s: &TimeSeries) -> Result<BTreeMap<i32, TimeSeries>> {
    let ts = s
        .timestamps()
        .ok_or_else(|| Error::Config("year partition needs timestamps".into()))?;
    let mut groups: BTreeMap<i32, (Vec<f64>, Vec<i64>)> = BTreeMap::new();
    for (&t, &v) in ts.iter().zip(&s.values) {
        let g = groups.entry(utc_year(t)?).or_default();
        g.0.push(v);
        g.1.push(t);
    }
    groups
        .into_iter()
        .map(|(year, (v, t))| Ok((year, TimeSeries::new(s.entity_id.clone(), v, Some(t))?)))
        .collect()
}

/// Time-reversed copy. Timestamps are dropped since they would no longer
/// increase.
pub fn reverse(s: &TimeSeries) -> TimeSeries {
    let mut values = s.values.clone();
    values.reverse();
    TimeSeries {
        entity_id: s.entity_id.clone(),
        values,
        timestamps: None,
    }
}
