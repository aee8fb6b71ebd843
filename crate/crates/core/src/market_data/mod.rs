//! Hourly two-market data: CSV ingestion, DST repair, chronological splits,
//! `[-1, 1]` scaling and a deterministic synthetic generator.
//!
//! Market `B` is the local market whose prices are forecast; market `F` is the
//! connected neighbouring market whose data may enter as extra features.

mod load;
mod repair;
mod scale;
mod synth;

pub use load::{load_csv, write_csv, CsvSchema};
pub use repair::repair_dst;
pub use scale::{fit_scaler, Channel, ScalingParams};
pub use synth::{synth_generate, SYNTH_BASE_DATE};

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),
    #[error("line {line}: unparseable row ({reason})")]
    UnparseableRow { line: usize, reason: String },
    #[error("timestamps not strictly increasing at line {0}")]
    NonMonotoneTimestamps(usize),
    #[error("day {date} has {count} records and cannot be repaired")]
    UnrepairableDay { date: NaiveDate, count: usize },
    #[error("split boundary out of range or produces an empty slice")]
    BoundaryOutOfRange,
    #[error("channel {0:?} is constant on the training slice; cannot scale")]
    DegenerateChannel(Channel),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One hour of aligned two-market data. Timestamps are local market time
/// without a UTC offset; holiday flags are constant within a calendar day.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyRecord {
    pub timestamp: NaiveDateTime,
    pub price_b: f64,
    pub price_f: f64,
    pub load_b: f64,
    pub load_f: f64,
    pub gen_b: f64,
    pub gen_f: f64,
    pub holiday_b: bool,
    pub holiday_f: bool,
}

impl HourlyRecord {
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date()
    }

    pub fn hour(&self) -> u32 {
        self.timestamp.hour()
    }

    pub fn channel(&self, ch: Channel) -> f64 {
        match ch {
            Channel::PriceB => self.price_b,
            Channel::PriceF => self.price_f,
            Channel::LoadB => self.load_b,
            Channel::LoadF => self.load_f,
            Channel::GenB => self.gen_b,
            Channel::GenF => self.gen_f,
        }
    }
}

/// Ordered hourly records plus a provenance tag. Immutable after construction.
///
/// A freshly loaded series may still carry the two DST irregularities per
/// year (one 23-hour and one 25-hour day); [`repair_dst`] turns it into a
/// gap-free series where every day holds exactly 24 records.
#[derive(Debug, Clone)]
pub struct MarketSeries {
    records: Vec<HourlyRecord>,
    provenance: String,
}

impl MarketSeries {
    pub fn new(records: Vec<HourlyRecord>, provenance: impl Into<String>) -> Self {
        Self {
            records,
            provenance: provenance.into(),
        }
    }

    pub fn records(&self) -> &[HourlyRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.records.first().map(HourlyRecord::date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.records.last().map(HourlyRecord::date)
    }

    /// Number of whole days; meaningful only on repaired series.
    pub fn n_days(&self) -> usize {
        self.records.len() / 24
    }

    /// Checks the repaired-series invariant: nonempty, length a multiple of
    /// 24, timestamps strictly increasing by exactly one hour, day boundaries
    /// at midnight, holiday flags constant within each day.
    pub fn validate_hourly(&self) -> Result<(), MarketDataError> {
        if self.records.is_empty() || !self.records.len().is_multiple_of(24) {
            return Err(MarketDataError::UnrepairableDay {
                date: self.first_date().unwrap_or_default(),
                count: self.records.len() % 24,
            });
        }
        let step = chrono::Duration::hours(1);
        for (i, w) in self.records.windows(2).enumerate() {
            if w[1].timestamp - w[0].timestamp != step {
                return Err(MarketDataError::NonMonotoneTimestamps(i + 2));
            }
        }
        for day in self.records.chunks(24) {
            let date = day[0].date();
            if day[0].hour() != 0 {
                return Err(MarketDataError::UnrepairableDay { date, count: 24 });
            }
            if day
                .iter()
                .any(|r| r.holiday_b != day[0].holiday_b || r.holiday_f != day[0].holiday_f)
            {
                return Err(MarketDataError::UnrepairableDay { date, count: 24 });
            }
        }
        Ok(())
    }

    /// Contiguous sub-series covering `[from, to]` calendar dates inclusive.
    pub fn slice_dates(&self, from: NaiveDate, to: NaiveDate) -> MarketSeries {
        let records = self
            .records
            .iter()
            .filter(|r| r.date() >= from && r.date() <= to)
            .cloned()
            .collect();
        MarketSeries::new(records, self.provenance.clone())
    }
}

/// Chronological train / validation / test partition of a repaired series.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: MarketSeries,
    pub validation: MarketSeries,
    pub test: MarketSeries,
    pub train_range: (NaiveDate, NaiveDate),
    pub validation_range: (NaiveDate, NaiveDate),
    pub test_range: (NaiveDate, NaiveDate),
}

/// Splits a series at two boundary dates. `train_end` is the first validation
/// day and `val_end` the first test day, so slices are `[start, train_end)`,
/// `[train_end, val_end)` and `[val_end, end]`. All three slices must be
/// nonempty.
pub fn split(
    series: &MarketSeries,
    train_end: NaiveDate,
    val_end: NaiveDate,
) -> Result<DatasetSplit, MarketDataError> {
    let (Some(first), Some(last)) = (series.first_date(), series.last_date()) else {
        return Err(MarketDataError::BoundaryOutOfRange);
    };
    if train_end >= val_end || train_end <= first || val_end > last {
        return Err(MarketDataError::BoundaryOutOfRange);
    }
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut test = Vec::new();
    for r in series.records() {
        let d = r.date();
        if d < train_end {
            train.push(r.clone());
        } else if d < val_end {
            validation.push(r.clone());
        } else {
            test.push(r.clone());
        }
    }
    if train.is_empty() || validation.is_empty() || test.is_empty() {
        return Err(MarketDataError::BoundaryOutOfRange);
    }
    let prov = series.provenance().to_string();
    let range = |recs: &[HourlyRecord]| (recs[0].date(), recs[recs.len() - 1].date());
    let (train_range, validation_range, test_range) =
        (range(&train), range(&validation), range(&test));
    Ok(DatasetSplit {
        train: MarketSeries::new(train, prov.clone()),
        validation: MarketSeries::new(validation, prov.clone()),
        test: MarketSeries::new(test, prov),
        train_range,
        validation_range,
        test_range,
    })
}
