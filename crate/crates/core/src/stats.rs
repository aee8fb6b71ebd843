//! Accuracy metrics and forecast-comparison tests: symmetric MAPE, loss
//! differentials and one-/two-sided Diebold-Mariano tests, per hour of day
//! and on the full error sequence with serial correlation.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("undefined sMAPE term: |y| + |y_hat| = 0 at index {0}")]
    UndefinedTerm(usize),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("loss differential has zero variance")]
    ZeroVariance,
    #[error("series too short: {n} observations for serial-correlation order {k}")]
    TooShort { n: usize, k: usize },
    #[error("malformed error series: {0}")]
    Malformed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Forecast errors `y - y_hat` labelled with date and hour of day 1..=24.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    dates: Vec<NaiveDate>,
    errors: Vec<f64>,
}

impl ErrorSeries {
    /// Builds a series from whole days of 24 hourly errors each.
    pub fn from_days(days: Vec<(NaiveDate, [f64; 24])>) -> Self {
        let mut dates = Vec::with_capacity(days.len());
        let mut errors = Vec::with_capacity(days.len() * 24);
        for (date, day) in days {
            dates.push(date);
            errors.extend_from_slice(&day);
        }
        Self { dates, errors }
    }

    pub fn from_flat(dates: Vec<NaiveDate>, errors: Vec<f64>) -> Result<Self, StatsError> {
        if errors.len() != dates.len() * 24 {
            return Err(StatsError::Malformed(format!(
                "{} errors for {} dates; expected 24 per date",
                errors.len(),
                dates.len()
            )));
        }
        Ok(Self { dates, errors })
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// Hour-of-day label (1..=24) of observation `k`.
    pub fn hour_label(&self, k: usize) -> usize {
        k % 24 + 1
    }

    fn check_aligned(&self, other: &Self) -> Result<(), StatsError> {
        if self.errors.len() != other.errors.len() || self.dates != other.dates {
            return Err(StatsError::LengthMismatch(
                "error series are not aligned on the same dates".into(),
            ));
        }
        Ok(())
    }
}

/// Symmetric mean absolute percentage error, in percent:
/// `100/N * sum |y - y_hat| / ((|y| + |y_hat|) / 2)`.
pub fn smape(actual: &[f64], predicted: &[f64]) -> Result<f64, StatsError> {
    if actual.len() != predicted.len() || actual.is_empty() {
        return Err(StatsError::LengthMismatch(format!(
            "{} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    let mut total = 0.0;
    for (k, (y, p)) in actual.iter().zip(predicted).enumerate() {
        let denom = (y.abs() + p.abs()) / 2.0;
        if denom == 0.0 {
            return Err(StatsError::UndefinedTerm(k));
        }
        total += (y - p).abs() / denom;
    }
    Ok(100.0 * total / actual.len() as f64)
}

/// Loss differential `d_k = |e1_k|^p - |e2_k|^p` with `p` in `{1, 2}`.
pub fn loss_differential(
    e1: &ErrorSeries,
    e2: &ErrorSeries,
    p: u32,
) -> Result<Vec<f64>, StatsError> {
    assert!(p == 1 || p == 2, "loss exponent must be 1 or 2");
    e1.check_aligned(e2)?;
    Ok(e1
        .errors
        .iter()
        .zip(&e2.errors)
        .map(|(a, b)| a.abs().powi(p as i32) - b.abs().powi(p as i32))
        .collect())
}

/// Test direction. The one-sided test takes model 1 as the candidate: it
/// rejects when the mean loss differential is negative, i.e. model 1 carries
/// the lower loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    OneSidedM1Better,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    /// Standard-normal-scale statistic `mean(d) / sqrt(V_lr / N)`.
    pub statistic: f64,
    pub p_value: f64,
    pub side: Side,
    pub serial_correlation_order: usize,
    pub n_obs: usize,
    /// Set when the truncated long-run variance came out nonpositive and
    /// Bartlett weights were used instead.
    pub bartlett_fallback: bool,
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn autocovariance(centered: &[f64], lag: usize) -> f64 {
    let n = centered.len();
    let mut acc = 0.0;
    for t in lag..n {
        acc += centered[t] * centered[t - lag];
    }
    acc / n as f64
}

/// Diebold-Mariano test on a loss-differential vector with serial
/// correlation up to order `k`.
///
/// The long-run variance uses the truncated (rectangular-kernel) estimator
/// `gamma_0 + 2 * sum_{j=1..k} gamma_j` with autocovariance divisor `N`;
/// `k = 0` therefore reduces to the plain population variance of `d`. If
/// truncation produces a nonpositive variance the estimator falls back to
/// Bartlett weights `1 - j/(k+1)` and flags the result.
pub fn dm_test(d: &[f64], k: usize, side: Side) -> Result<DmResult, StatsError> {
    let n = d.len();
    if n <= k + 1 {
        return Err(StatsError::TooShort { n, k });
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = d.iter().map(|v| v - mean).collect();
    let gamma0 = autocovariance(&centered, 0);
    if gamma0 == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let gammas: Vec<f64> = (1..=k).map(|j| autocovariance(&centered, j)).collect();
    let mut long_run = gamma0 + 2.0 * gammas.iter().sum::<f64>();
    let mut fallback = false;
    if long_run <= 0.0 {
        fallback = true;
        long_run = gamma0
            + 2.0
                * gammas
                    .iter()
                    .enumerate()
                    .map(|(i, g)| (1.0 - (i + 1) as f64 / (k + 1) as f64) * g)
                    .sum::<f64>();
        if long_run <= 0.0 {
            return Err(StatsError::ZeroVariance);
        }
    }
    let statistic = mean / (long_run / n as f64).sqrt();
    let p_value = match side {
        Side::OneSidedM1Better => normal_cdf(statistic),
        Side::TwoSided => 2.0 * (1.0 - normal_cdf(statistic.abs())),
    };
    Ok(DmResult {
        statistic,
        p_value,
        side,
        serial_correlation_order: k,
        n_obs: n,
        bartlett_fallback: fallback,
    })
}

/// Outcome of one hour-of-day test; degenerate hours carry the error.
#[derive(Debug)]
pub struct HourlyDm {
    pub hour: usize,
    pub outcome: Result<DmResult, StatsError>,
}

/// Independent DM test per hour of day with `k = 0` (across days, errors of
/// a fixed hour are treated as serially independent). Always returns 24
/// entries, hour labels 1..=24. Losses use the absolute error (`p = 1`).
pub fn hourly_dm(
    e1: &ErrorSeries,
    e2: &ErrorSeries,
    side: Side,
) -> Result<Vec<HourlyDm>, StatsError> {
    let d = loss_differential(e1, e2, 1)?;
    let mut out = Vec::with_capacity(24);
    for hour in 1..=24 {
        let series: Vec<f64> = d
            .iter()
            .enumerate()
            .filter(|(k, _)| k % 24 + 1 == hour)
            .map(|(_, v)| *v)
            .collect();
        out.push(HourlyDm {
            hour,
            outcome: dm_test(&series, 0, side),
        });
    }
    Ok(out)
}

/// DM test on the undivided loss differential with serial-correlation order
/// 23 (forecasts are 24-step-ahead, so errors are at most 23-dependent).
pub fn full_dm(e1: &ErrorSeries, e2: &ErrorSeries, side: Side) -> Result<DmResult, StatsError> {
    let d = loss_differential(e1, e2, 1)?;
    dm_test(&d, 23, side)
}

/// Writes the `date,hour,error_m1,error_m2` interchange CSV.
pub fn write_error_series_csv(
    e1: &ErrorSeries,
    e2: &ErrorSeries,
    path: impl AsRef<Path>,
) -> Result<(), StatsError> {
    e1.check_aligned(e2)?;
    let mut f = File::create(path)?;
    writeln!(f, "date,hour,error_m1,error_m2")?;
    for (k, (a, b)) in e1.errors.iter().zip(&e2.errors).enumerate() {
        writeln!(f, "{},{},{},{}", e1.dates[k / 24], k % 24 + 1, a, b)?;
    }
    Ok(())
}

/// Reads the `date,hour,error_m1,error_m2` interchange CSV.
pub fn read_error_series_csv(
    path: impl AsRef<Path>,
) -> Result<(ErrorSeries, ErrorSeries), StatsError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "date,hour,error_m1,error_m2" {
        return Err(StatsError::Malformed("bad or missing header".into()));
    }
    let mut dates = Vec::new();
    let mut e1 = Vec::new();
    let mut e2 = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(StatsError::Malformed(format!(
                "line {}: need 4 fields",
                idx + 2
            )));
        }
        let date: NaiveDate = fields[0]
            .parse()
            .map_err(|_| StatsError::Malformed(format!("line {}: bad date", idx + 2)))?;
        let hour: usize = fields[1]
            .parse()
            .map_err(|_| StatsError::Malformed(format!("line {}: bad hour", idx + 2)))?;
        if hour != e1.len() % 24 + 1 {
            return Err(StatsError::Malformed(format!(
                "line {}: hour labels must cycle 1..=24",
                idx + 2
            )));
        }
        if hour == 1 {
            dates.push(date);
        }
        let a: f64 = fields[2]
            .parse()
            .map_err(|_| StatsError::Malformed(format!("line {}: bad error_m1", idx + 2)))?;
        let b: f64 = fields[3]
            .parse()
            .map_err(|_| StatsError::Malformed(format!("line {}: bad error_m2", idx + 2)))?;
        e1.push(a);
        e2.push(b);
    }
    Ok((
        ErrorSeries::from_flat(dates.clone(), e1)?,
        ErrorSeries::from_flat(dates, e2)?,
    ))
}
