//! Study orchestration: feature-selection runs, walk-forward backtests,
//! single-vs-dual comparisons and report emission.

mod backtest;
mod compare;
mod selection;
mod study;

pub use backtest::{
    audit_backtest, read_backtest_csv, run_backtest, write_backtest_csv, BacktestDay,
    BacktestResult, LeakageAudit,
};
pub use compare::{
    compare_models, render_comparison, write_dm_csv, write_hourly_plotdata_csv, ComparisonReport,
    HourlyDmRow, DM_REFERENCE_LINE,
};
pub use selection::{run_feature_selection, validation_smape, SelectionOutcome};
pub use study::{DataSource, SplitSpec, StudySpec};

use crate::stats::Side;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("study spec error: {0}")]
    Spec(String),
    #[error(transparent)]
    Data(#[from] crate::market_data::MarketDataError),
    #[error("data error: {0}")]
    Data2(String),
    #[error(transparent)]
    Feature(#[from] crate::feature_space::FeatureSpaceError),
    #[error(transparent)]
    Net(#[from] crate::neural_net::NetError),
    #[error(transparent)]
    Tpe(#[from] crate::tpe::TpeError),
    #[error(transparent)]
    Fanova(#[from] crate::fanova::FanovaError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    /// CLI exit code: 2 spec error, 3 data error, 4 numeric degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Spec(_) => 2,
            ExperimentError::Feature(crate::feature_space::FeatureSpaceError::InvalidConfig(_)) => {
                2
            }
            ExperimentError::Tpe(crate::tpe::TpeError::InvalidSettings(_)) => 2,
            ExperimentError::Data(_)
            | ExperimentError::Data2(_)
            | ExperimentError::Feature(_)
            | ExperimentError::Alignment(_)
            | ExperimentError::Io(_)
            | ExperimentError::Tpe(_) => 3,
            ExperimentError::Net(crate::neural_net::NetError::EmptyDataset(_)) => 3,
            ExperimentError::Net(_) | ExperimentError::Fanova(_) | ExperimentError::Stats(_) => 4,
        }
    }
}

/// Result of the single-vs-dual study: both backtests plus the comparison
/// of the dual model's local-market channel against the single model.
#[derive(Debug)]
pub struct DualStudyOutcome {
    pub single: BacktestResult,
    pub dual: BacktestResult,
    pub comparison: ComparisonReport,
    pub audit_single: LeakageAudit,
    pub audit_dual: LeakageAudit,
}

/// Trains and backtests the single- and dual-market variants with identical
/// inputs and hyperparameters, then compares the dual model's first-market
/// outputs against the single model (one-sided: dual more accurate).
pub fn run_dual_study(
    spec: &StudySpec,
    config: &crate::feature_space::FeatureConfig,
) -> Result<DualStudyOutcome, ExperimentError> {
    let (series, split, scaler) = spec.materialize()?;

    let mut single_spec = spec.clone();
    single_spec.dual = false;
    let single = run_backtest(&single_spec, config, &series, &split, &scaler)?;

    let mut dual_spec = spec.clone();
    dual_spec.dual = true;
    let dual = run_backtest(&dual_spec, config, &series, &split, &scaler)?;

    let comparison = compare_models(
        "dual-market",
        &dual.days,
        "single-market",
        &single.days,
        Side::OneSidedM1Better,
    )?;
    let audit_single = audit_backtest(&single);
    let audit_dual = audit_backtest(&dual);
    Ok(DualStudyOutcome {
        single,
        dual,
        comparison,
        audit_single,
        audit_dual,
    })
}

#[cfg(test)]
mod tests;
