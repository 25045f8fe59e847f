//! Series CSV files: a `time,value` header, one row per observation, with an
//! empty `value` or the token `NA` marking a missing observation. Rows are
//! taken as consecutive; the time column only supplies the start stamp.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const MISSING_TOKEN: &str = "NA";

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::ParseError {
        line,
        message: message.into(),
    }
}

/// Reads a `time,value` CSV into a series with the given frequency.
pub fn load_csv(path: impl AsRef<Path>, frequency: usize) -> Result<TimeSeries> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let headers = reader
        .headers()
        .map_err(|e| parse_error(1, e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::EmptyFile);
    }
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let value_col = column("value").ok_or_else(|| parse_error(1, "missing `value` column"))?;
    let time_col = column("time").ok_or_else(|| parse_error(1, "missing `time` column"))?;

    let mut values = Vec::new();
    let mut start = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let raw = record
            .get(value_col)
            .ok_or_else(|| parse_error(line, "missing value field"))?;
        let value = if raw.is_empty() || raw == MISSING_TOKEN {
            None
        } else {
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_error(line, format!("invalid value `{raw}`")))?;
            if !v.is_finite() {
                return Err(parse_error(line, format!("non-finite value `{raw}`")));
            }
            Some(v)
        };
        if start.is_none() {
            start = Some(record.get(time_col).and_then(|t| t.parse().ok()).unwrap_or(1.0));
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::EmptyFile);
    }
    TimeSeries::new(values, frequency, start.unwrap_or(1.0))
}

/// Time column value for row `i`: the first time stamp read plus the row
/// offset, so files written back keep the numbering they were read with.
pub fn row_time(series: &TimeSeries, i: usize) -> f64 {
    series.start() + i as f64
}

/// Writes a series as `time,value`, missing values as `NA`.
pub fn write_series_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["time", "value"])?;
    for (i, v) in series.values().iter().enumerate() {
        let value = v.map_or_else(|| MISSING_TOKEN.to_string(), |v| v.to_string());
        writer.write_record([row_time(series, i).to_string(), value])?;
    }
    writer.flush()?;
    Ok(())
}
