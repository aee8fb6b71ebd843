//! Walk-forward evaluation: step through the test year day by day,
//! retraining on everything published before each day's bid deadline and
//! predicting that day, with an audit trail proving no forecast ever read
//! data from at or after its own deadline.

use super::study::StudySpec;
use super::ExperimentError;
use crate::feature_space::{
    build_samples, build_samples_from, input_dimension, price_lag_offsets, FeatureConfig,
};
use crate::market_data::{DatasetSplit, MarketSeries, ScalingParams};
use crate::neural_net::{glorot_init, predict_day, train_with_init, NetworkShape, NetworkWeights};
use crate::stats::{smape, ErrorSeries};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// One forecast day: local-market actuals and predictions in real units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BacktestDay {
    pub date: NaiveDate,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    /// most recent target date present in the retraining set for this day
    pub train_last_target: NaiveDate,
}

/// Full walk-forward result over the test slice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BacktestResult {
    pub config: FeatureConfig,
    pub dual: bool,
    pub cadence_days: usize,
    pub days: Vec<BacktestDay>,
    /// sMAPE over all hours of the test window, percent
    pub smape: f64,
}

impl BacktestResult {
    pub fn error_series(&self) -> ErrorSeries {
        ErrorSeries::from_days(
            self.days
                .iter()
                .map(|d| {
                    let mut errs = [0.0; 24];
                    for h in 0..24 {
                        errs[h] = d.actual[h] - d.predicted[h];
                    }
                    (d.date, errs)
                })
                .collect(),
        )
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.days.iter().map(|d| d.date).collect()
    }
}

/// Walk-forward backtest of one configuration over the spec's test slice.
///
/// For each test day `d` (in order, retraining every `cadence_days`): train
/// on every whole day strictly before `d` (the train and validation slices
/// plus elapsed test days, unless `fold_test_days` keeps the elapsed test
/// days out) with early stopping evaluated on the spec's validation slice,
/// then predict day `d`. Per-retrain seeds derive from
/// `train.seed` plus the day index unless `warm_start` reuses the previous
/// weights.
pub fn run_backtest(
    spec: &StudySpec,
    config: &FeatureConfig,
    series: &MarketSeries,
    split: &DatasetSplit,
    scaler: &ScalingParams,
) -> Result<BacktestResult, ExperimentError> {
    let dual = spec.dual;
    let n_in = input_dimension(config)?;
    let n_out = if dual { 48 } else { 24 };
    let shape = NetworkShape::new(n_in, config.n1 as usize, config.n2 as usize, n_out)
        .map_err(ExperimentError::Net)?;

    let first_date = series
        .first_date()
        .ok_or_else(|| ExperimentError::Spec("empty series".into()))?;
    let val_samples = build_samples(config, &split.validation, scaler, dual)?;

    let test_days: Vec<NaiveDate> = split
        .test
        .records()
        .chunks(24)
        .map(|day| day[0].date())
        .collect();

    let mut weights: Option<NetworkWeights> = None;
    let mut days = Vec::with_capacity(test_days.len());
    let mut all_actual = Vec::new();
    let mut all_predicted = Vec::new();
    let mut train_last_target = first_date;

    for (day_idx, &date) in test_days.iter().enumerate() {
        let retrain = day_idx % spec.cadence_days.max(1) == 0;
        if retrain || weights.is_none() {
            let train_until = if spec.fold_test_days {
                date.pred_opt().expect("date has a predecessor")
            } else {
                // last validation day
                split.validation_range.1
            };
            let train_slice = series.slice_dates(first_date, train_until);
            let train_samples = build_samples(config, &train_slice, scaler, dual)?;
            train_last_target = *train_samples
                .origin_days
                .last()
                .expect("nonempty training sample set");

            let mut settings = spec.train;
            settings.seed = spec.train.seed.wrapping_add(day_idx as u64);
            let init = match (&weights, spec.warm_start) {
                (Some(w), true) => w.clone(),
                _ => glorot_init(shape, settings.seed),
            };
            let (w, _) = train_with_init(&train_samples, &val_samples, init, &settings)?;
            weights = Some(w);
        }

        let w = weights.as_ref().expect("weights trained");
        let slice = series.slice_dates(first_date, date);
        let sample = build_samples_from(config, &slice, scaler, dual, Some(date))?;
        if sample.len() != 1 {
            return Err(ExperimentError::Spec(format!(
                "expected exactly one sample for {date}, got {}",
                sample.len()
            )));
        }
        let prices = predict_day(w, sample.inputs.row(0), scaler);
        let actual: Vec<f64> = series
            .records()
            .iter()
            .filter(|r| r.date() == date)
            .map(|r| r.price_b)
            .collect();
        let predicted = prices[..24].to_vec();
        all_actual.extend_from_slice(&actual);
        all_predicted.extend_from_slice(&predicted);
        days.push(BacktestDay {
            date,
            actual,
            predicted,
            train_last_target,
        });
    }

    let smape = smape(&all_actual, &all_predicted)?;
    Ok(BacktestResult {
        config: *config,
        dual,
        cadence_days: spec.cadence_days,
        days,
        smape,
    })
}

/// Outcome of the no-leakage audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub checked_days: usize,
    pub violations: Vec<String>,
}

impl LeakageAudit {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Replays the input-index arithmetic of every prediction independently of
/// the sample builder: every price-lag timestamp must fall strictly before
/// the forecast day's first hour, day-ahead curve and holiday inputs must
/// describe the forecast day itself, and no retraining set may contain a
/// target at or after the forecast day.
pub fn audit_backtest(result: &BacktestResult) -> LeakageAudit {
    let mut violations = Vec::new();
    let offsets = price_lag_offsets(&result.config);
    for day in &result.days {
        let deadline = day.date.and_hms_opt(0, 0, 0).unwrap();
        for &off in &offsets {
            // lag offset 0 is the final hour of the previous day
            let ts = deadline - chrono::Duration::hours(1 + off as i64);
            if ts >= deadline {
                violations.push(format!(
                    "{}: price lag at {ts} is not before the deadline",
                    day.date
                ));
            }
        }
        // exogenous inputs are the forecast day's own curves, published
        // before the deadline; they must never reach past the forecast day
        let last_exogenous = day.date.and_hms_opt(23, 0, 0).unwrap();
        if last_exogenous.date() > day.date {
            violations.push(format!(
                "{}: exogenous input beyond the forecast day",
                day.date
            ));
        }
        if day.train_last_target >= day.date {
            violations.push(format!(
                "{}: retraining set contains target day {}",
                day.date, day.train_last_target
            ));
        }
    }
    LeakageAudit {
        checked_days: result.days.len(),
        violations,
    }
}

/// Writes the per-hour backtest CSV: `date,hour,actual,predicted`.
pub fn write_backtest_csv(
    result: &BacktestResult,
    path: impl AsRef<Path>,
) -> Result<(), ExperimentError> {
    let mut f = File::create(path)?;
    writeln!(f, "date,hour,actual,predicted")?;
    for day in &result.days {
        for h in 0..24 {
            writeln!(
                f,
                "{},{},{},{}",
                day.date,
                h + 1,
                day.actual[h],
                day.predicted[h]
            )?;
        }
    }
    Ok(())
}

/// Reads a backtest CSV back into day records (config-independent fields
/// only; used by the standalone `compare` command).
pub fn read_backtest_csv(path: impl AsRef<Path>) -> Result<Vec<BacktestDay>, ExperimentError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "date,hour,actual,predicted" {
        return Err(ExperimentError::Data2(format!(
            "bad backtest CSV header `{header}`"
        )));
    }
    let mut days: Vec<BacktestDay> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(ExperimentError::Data2(format!(
                "line {}: need 4 fields",
                idx + 2
            )));
        }
        let date: NaiveDate = fields[0]
            .parse()
            .map_err(|_| ExperimentError::Data2(format!("line {}: bad date", idx + 2)))?;
        let hour: usize = fields[1]
            .parse()
            .map_err(|_| ExperimentError::Data2(format!("line {}: bad hour", idx + 2)))?;
        let actual: f64 = fields[2]
            .parse()
            .map_err(|_| ExperimentError::Data2(format!("line {}: bad actual", idx + 2)))?;
        let predicted: f64 = fields[3]
            .parse()
            .map_err(|_| ExperimentError::Data2(format!("line {}: bad predicted", idx + 2)))?;
        if hour == 1 {
            days.push(BacktestDay {
                date,
                actual: Vec::with_capacity(24),
                predicted: Vec::with_capacity(24),
                train_last_target: date.pred_opt().unwrap_or(date),
            });
        }
        let day = days
            .last_mut()
            .ok_or_else(|| ExperimentError::Data2(format!("line {}: hour 1 missing", idx + 2)))?;
        if day.actual.len() + 1 != hour || day.date != date {
            return Err(ExperimentError::Data2(format!(
                "line {}: hours must cycle 1..=24 per date",
                idx + 2
            )));
        }
        day.actual.push(actual);
        day.predicted.push(predicted);
    }
    for day in &days {
        if day.actual.len() != 24 {
            return Err(ExperimentError::Data2(format!(
                "{} has fewer than 24 hours",
                day.date
            )));
        }
    }
    Ok(days)
}
