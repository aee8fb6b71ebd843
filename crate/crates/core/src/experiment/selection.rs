//! The wrapper feature-selection pipeline: model-based search over the joint
//! feature/hyperparameter space with validation sMAPE as the objective,
//! followed by forest-based importance analysis and the selection rule.

use super::study::StudySpec;
use super::ExperimentError;
use crate::fanova::{
    decompose, feature_marginals, fit_forest, select_features, FeatureMarginals, ImportanceReport,
    SelectionResult,
};
use crate::feature_space::{build_samples, input_dimension, FeatureConfig, SampleSet};
use crate::market_data::{Channel, DatasetSplit, ScalingParams};
use crate::neural_net::{forward, train, NetworkShape};
use crate::stats::smape;
use crate::tpe::{optimize_with, Trial, TrialHistory};

/// Everything the selection study produces.
#[derive(Debug)]
pub struct SelectionOutcome {
    pub best_config: FeatureConfig,
    pub history: TrialHistory,
    pub report: ImportanceReport,
    pub marginals: FeatureMarginals,
    pub selection: SelectionResult,
}

/// Validation sMAPE (percent, real price units) of one configuration:
/// train a single-market net on the training slice with early stopping on
/// the validation slice, then score the validation days.
pub fn validation_smape(
    config: &FeatureConfig,
    split: &DatasetSplit,
    scaler: &ScalingParams,
    train_settings: &crate::neural_net::TrainSettings,
) -> Result<f64, ExperimentError> {
    let samples_train = build_samples(config, &split.train, scaler, false)?;
    let samples_val = build_samples(config, &split.validation, scaler, false)?;
    let shape = NetworkShape::new(
        input_dimension(config)?,
        config.n1 as usize,
        config.n2 as usize,
        24,
    )
    .map_err(ExperimentError::Net)?;
    let (weights, _) = train(&samples_train, &samples_val, shape, train_settings)?;
    score_smape(&weights, &samples_val, scaler).map_err(ExperimentError::Stats)
}

fn score_smape(
    weights: &crate::neural_net::NetworkWeights,
    samples: &SampleSet,
    scaler: &ScalingParams,
) -> Result<f64, crate::stats::StatsError> {
    let mut actual = Vec::with_capacity(samples.len() * 24);
    let mut predicted = Vec::with_capacity(samples.len() * 24);
    for row in 0..samples.len() {
        let out = forward(weights, samples.inputs.row(row)).output;
        for (target, pred) in samples.targets.row(row).iter().zip(&out).take(24) {
            actual.push(scaler.invert(Channel::PriceB, *target));
            predicted.push(scaler.invert(Channel::PriceB, *pred));
        }
    }
    smape(&actual, &predicted)
}

/// Runs the whole selection study. `on_trial` fires after every objective
/// evaluation (the CLI streams the trial log through it).
pub fn run_feature_selection(
    spec: &StudySpec,
    mut on_trial: impl FnMut(&Trial),
) -> Result<SelectionOutcome, ExperimentError> {
    let (_series, split, scaler) = spec.materialize()?;

    let objective = |config: &FeatureConfig| -> f64 {
        validation_smape(config, &split, &scaler, &spec.train).unwrap_or(f64::INFINITY)
    };
    let history = TrialHistory::new(spec.space.clone());
    let (best_config, history) = optimize_with(history, objective, &spec.tpe, |t| on_trial(t))
        .map_err(ExperimentError::Tpe)?;

    let forest = fit_forest(&history, &spec.forest)?;
    let report = decompose(&forest)?;
    let marginals = feature_marginals(&forest)?;
    let selection = select_features(&report, &marginals, spec.epsilon)?;

    Ok(SelectionOutcome {
        best_config,
        history,
        report,
        marginals,
        selection,
    })
}
