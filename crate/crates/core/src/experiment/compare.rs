//! Pairwise model comparison: sMAPE table, 24 hourly one-sided DM
//! statistics, full-sequence DM with serial correlation, rendered as text,
//! machine-readable JSON and plot-data CSV.

use super::backtest::BacktestDay;
use super::ExperimentError;
use crate::stats::{full_dm, hourly_dm, smape, DmResult, ErrorSeries, Side, StatsError};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::Write;
use std::path::Path;

/// 95% one-sided standard-normal critical value drawn as the reference line
/// in the hourly plots.
pub const DM_REFERENCE_LINE: f64 = 1.6448536269514722;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HourlyDmRow {
    pub hour: usize,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub name_a: String,
    pub name_b: String,
    pub smape_a: f64,
    pub smape_b: f64,
    pub side: Side,
    pub hourly: Vec<HourlyDmRow>,
    /// full-sequence test with serial-correlation order 23; `None` when the
    /// differential is degenerate (e.g. identical models)
    pub full: Option<DmResult>,
    pub degenerate_full: bool,
    pub n_days: usize,
}

fn check_aligned(a: &[BacktestDay], b: &[BacktestDay]) -> Result<(), ExperimentError> {
    if a.len() != b.len()
        || a.iter()
            .zip(b)
            .any(|(x, y)| x.date != y.date || x.actual != y.actual)
    {
        return Err(ExperimentError::Alignment(
            "backtest results cover different days or actuals".into(),
        ));
    }
    Ok(())
}

fn error_series(days: &[BacktestDay]) -> ErrorSeries {
    ErrorSeries::from_days(
        days.iter()
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

/// Compares model A against model B on aligned backtest days. One-sided
/// tests take A as the candidate (alternative: A more accurate than B).
pub fn compare_models(
    name_a: &str,
    days_a: &[BacktestDay],
    name_b: &str,
    days_b: &[BacktestDay],
    side: Side,
) -> Result<ComparisonReport, ExperimentError> {
    check_aligned(days_a, days_b)?;
    let flatten = |days: &[BacktestDay], pick: fn(&BacktestDay) -> &Vec<f64>| -> Vec<f64> {
        days.iter().flat_map(|d| pick(d).iter().copied()).collect()
    };
    let actual = flatten(days_a, |d| &d.actual);
    let smape_a = smape(&actual, &flatten(days_a, |d| &d.predicted))?;
    let smape_b = smape(&actual, &flatten(days_b, |d| &d.predicted))?;

    let e_a = error_series(days_a);
    let e_b = error_series(days_b);
    let hourly = hourly_dm(&e_a, &e_b, side)?
        .into_iter()
        .map(|h| match h.outcome {
            Ok(r) => HourlyDmRow {
                hour: h.hour,
                statistic: Some(r.statistic),
                p_value: Some(r.p_value),
                degenerate: false,
            },
            Err(_) => HourlyDmRow {
                hour: h.hour,
                statistic: None,
                p_value: None,
                degenerate: true,
            },
        })
        .collect();
    let (full, degenerate_full) = match full_dm(&e_a, &e_b, side) {
        Ok(r) => (Some(r), false),
        Err(StatsError::ZeroVariance) => (None, true),
        Err(e) => return Err(ExperimentError::Stats(e)),
    };
    Ok(ComparisonReport {
        name_a: name_a.to_string(),
        name_b: name_b.to_string(),
        smape_a,
        smape_b,
        side,
        hourly,
        full,
        degenerate_full,
        n_days: days_a.len(),
    })
}

/// Text rendering: sMAPE table, full-sequence test, hourly statistics.
pub fn render_comparison(report: &ComparisonReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Comparison over {} test days ({} vs {})\n\n",
        report.n_days, report.name_a, report.name_b
    ));
    out.push_str(&format!("  {:<24} {:>8}\n", "Model", "sMAPE"));
    out.push_str(&format!(
        "  {:<24} {:>7.1}%\n",
        report.name_a, report.smape_a
    ));
    out.push_str(&format!(
        "  {:<24} {:>7.1}%\n\n",
        report.name_b, report.smape_b
    ));

    match (&report.full, report.degenerate_full) {
        (Some(full), _) => {
            out.push_str(&format!(
                "Full-sequence DM (serial correlation order {}): statistic {:.3}, p-value {:.1e}{}\n",
                full.serial_correlation_order,
                full.statistic,
                full.p_value,
                if full.bartlett_fallback {
                    " [Bartlett fallback]"
                } else {
                    ""
                }
            ));
        }
        (None, true) => out.push_str("Full-sequence DM: degenerate (zero-variance differential)\n"),
        (None, false) => {}
    }
    out.push_str(&format!(
        "\nHourly one-sided DM statistics (values above {DM_REFERENCE_LINE:.3} favour {} at 95% confidence)\n",
        report.name_a
    ));
    for row in &report.hourly {
        match row.statistic {
            Some(s) => out.push_str(&format!("  hour {:>2}: {:>8.3}\n", row.hour, s)),
            None => out.push_str(&format!("  hour {:>2}: degenerate\n", row.hour)),
        }
    }
    out
}

/// Writes `dm.csv`: the full-sequence test plus one row per hour.
pub fn write_dm_csv(
    report: &ComparisonReport,
    path: impl AsRef<Path>,
) -> Result<(), ExperimentError> {
    let mut f = File::create(path)?;
    writeln!(f, "scope,order,n_obs,statistic,p_value,degenerate")?;
    match &report.full {
        Some(full) => writeln!(
            f,
            "full,{},{},{},{},0",
            full.serial_correlation_order, full.n_obs, full.statistic, full.p_value
        )?,
        None => writeln!(f, "full,23,{},,,1", report.n_days * 24)?,
    }
    for row in &report.hourly {
        match (row.statistic, row.p_value) {
            (Some(s), Some(p)) => {
                writeln!(f, "hour_{},0,{},{},{},0", row.hour, report.n_days, s, p)?
            }
            _ => writeln!(f, "hour_{},0,{},,,1", row.hour, report.n_days)?,
        }
    }
    Ok(())
}

/// Writes `hourly_dm_plotdata.csv`: exactly 24 rows of
/// `hour,statistic,reference` mirroring the hourly comparison figures.
pub fn write_hourly_plotdata_csv(
    report: &ComparisonReport,
    path: impl AsRef<Path>,
) -> Result<(), ExperimentError> {
    let mut f = File::create(path)?;
    writeln!(f, "hour,statistic,reference")?;
    for row in &report.hourly {
        let stat = row.statistic.map_or(String::new(), |s| s.to_string());
        writeln!(f, "{},{},{}", row.hour, stat, DM_REFERENCE_LINE)?;
    }
    Ok(())
}
