//! CSV ingestion for the canonical two-market schema.
//!
//! Canonical header:
//! `timestamp,price_B,price_F,load_B,load_F,gen_B,gen_F,holiday_B,holiday_F`
//! with ISO-8601 local timestamps `YYYY-MM-DDTHH:00`, `.` decimals and
//! literal `0`/`1` holiday flags. A [`CsvSchema`] remaps header names when a
//! source uses different column labels.

use super::{HourlyRecord, MarketDataError, MarketSeries};
use chrono::{NaiveDateTime, Timelike};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Maps the canonical column roles onto the header names present in a file.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub timestamp: String,
    pub price_b: String,
    pub price_f: String,
    pub load_b: String,
    pub load_f: String,
    pub gen_b: String,
    pub gen_f: String,
    pub holiday_b: String,
    pub holiday_f: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            price_b: "price_B".into(),
            price_f: "price_F".into(),
            load_b: "load_B".into(),
            load_f: "load_F".into(),
            gen_b: "gen_B".into(),
            gen_f: "gen_F".into(),
            holiday_b: "holiday_B".into(),
            holiday_f: "holiday_F".into(),
        }
    }
}

impl CsvSchema {
    fn column_indices(&self, header: &str) -> Result<[usize; 9], MarketDataError> {
        let names: Vec<&str> = header.split(',').map(str::trim).collect();
        let find = |wanted: &str| -> Result<usize, MarketDataError> {
            names
                .iter()
                .position(|n| *n == wanted)
                .ok_or_else(|| MarketDataError::MissingColumn(wanted.to_string()))
        };
        Ok([
            find(&self.timestamp)?,
            find(&self.price_b)?,
            find(&self.price_f)?,
            find(&self.load_b)?,
            find(&self.load_f)?,
            find(&self.gen_b)?,
            find(&self.gen_f)?,
            find(&self.holiday_b)?,
            find(&self.holiday_f)?,
        ])
    }
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let ts = NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M")
        .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S"))
        .ok()?;
    (ts.minute() == 0 && ts.second() == 0).then_some(ts)
}

fn parse_finite(raw: &str) -> Option<f64> {
    let v: f64 = raw.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

fn parse_flag(raw: &str) -> Option<bool> {
    match raw.trim() {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

/// Loads an hourly two-market CSV. Rows must be ordered by strictly
/// increasing timestamp; duplicates are rejected. The returned series may
/// still contain DST irregularities (see [`super::repair_dst`]).
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &CsvSchema,
) -> Result<MarketSeries, MarketDataError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => {
            return Err(MarketDataError::UnparseableRow {
                line: 1,
                reason: "empty file".into(),
            })
        }
    };
    let cols = schema.column_indices(&header)?;
    let n_needed = 1 + cols.iter().max().unwrap();

    let mut records = Vec::new();
    for (idx, raw) in lines.enumerate() {
        let line_no = idx + 2;
        let raw = raw?;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() < n_needed {
            return Err(MarketDataError::UnparseableRow {
                line: line_no,
                reason: format!("expected at least {n_needed} fields, got {}", fields.len()),
            });
        }
        let bad = |what: &str| MarketDataError::UnparseableRow {
            line: line_no,
            reason: format!("bad {what}"),
        };
        let record = HourlyRecord {
            timestamp: parse_timestamp(fields[cols[0]].trim()).ok_or_else(|| bad("timestamp"))?,
            price_b: parse_finite(fields[cols[1]]).ok_or_else(|| bad("price_B"))?,
            price_f: parse_finite(fields[cols[2]]).ok_or_else(|| bad("price_F"))?,
            load_b: parse_finite(fields[cols[3]]).ok_or_else(|| bad("load_B"))?,
            load_f: parse_finite(fields[cols[4]]).ok_or_else(|| bad("load_F"))?,
            gen_b: parse_finite(fields[cols[5]]).ok_or_else(|| bad("gen_B"))?,
            gen_f: parse_finite(fields[cols[6]]).ok_or_else(|| bad("gen_F"))?,
            holiday_b: parse_flag(fields[cols[7]]).ok_or_else(|| bad("holiday_B"))?,
            holiday_f: parse_flag(fields[cols[8]]).ok_or_else(|| bad("holiday_F"))?,
        };
        if let Some(prev) = records.last() {
            let prev: &HourlyRecord = prev;
            if record.timestamp <= prev.timestamp {
                return Err(MarketDataError::NonMonotoneTimestamps(line_no));
            }
        }
        records.push(record);
    }
    Ok(MarketSeries::new(records, path.display().to_string()))
}

/// Writes a series in the canonical CSV schema.
pub fn write_csv(series: &MarketSeries, path: impl AsRef<Path>) -> Result<(), MarketDataError> {
    let mut f = File::create(path)?;
    writeln!(
        f,
        "timestamp,price_B,price_F,load_B,load_F,gen_B,gen_F,holiday_B,holiday_F"
    )?;
    for r in series.records() {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{}",
            r.timestamp.format("%Y-%m-%dT%H:%M"),
            r.price_b,
            r.price_f,
            r.load_b,
            r.load_f,
            r.gen_b,
            r.gen_f,
            r.holiday_b as u8,
            r.holiday_f as u8,
        )?;
    }
    Ok(())
}
