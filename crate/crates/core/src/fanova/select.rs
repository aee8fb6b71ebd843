//! Four-step feature selection on top of the variance decomposition:
//! threshold the main effects, rescue strong pairwise interactions, drop
//! features whose inclusion never beats exclusion, then split the survivors
//! into binary features and integer features with a best instantiation.

use super::decompose::{marginal, ImportanceReport, MarginalPrediction};
use super::forest::PerformanceForest;
use super::FanovaError;
use crate::feature_space::Coord;
use serde::{Deserialize, Serialize};

/// Marginal performance per instantiation for every selectable feature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMarginals {
    /// (coordinate, per-domain-value marginal), selectable features only
    pub per_feature: Vec<(Coord, Vec<MarginalPrediction>)>,
}

/// Computes the per-value marginals of every selectable feature coordinate.
pub fn feature_marginals(forest: &PerformanceForest) -> Result<FeatureMarginals, FanovaError> {
    let mut per_feature = Vec::new();
    for coord in Coord::ALL {
        if !(coord.is_binary_feature() || coord.is_integer_feature()) {
            continue;
        }
        let mut per_value = Vec::new();
        for &v in forest.space().domain(coord) {
            per_value.push(marginal(forest, &[(coord, v)])?);
        }
        per_feature.push((coord, per_value));
    }
    Ok(FeatureMarginals { per_feature })
}

impl FeatureMarginals {
    fn values_of(&self, coord: Coord) -> Option<&[MarginalPrediction]> {
        self.per_feature
            .iter()
            .find(|(c, _)| *c == coord)
            .map(|(_, v)| v.as_slice())
    }
}

/// Outcome of the selection rule. Performance is an error metric, so
/// "better" everywhere below means strictly lower predicted sMAPE.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionResult {
    /// features whose main effect exceeds the threshold
    pub preselected_main: Vec<Coord>,
    /// features with at least one pairwise effect above the threshold
    pub preselected_pairwise: Vec<Coord>,
    /// features surviving the inclusion-beats-exclusion check
    pub selected: Vec<Coord>,
    /// selected binary features
    pub binary: Vec<Coord>,
    /// selected integer features with their best instantiation
    pub integer: Vec<(Coord, u32)>,
    pub epsilon: f64,
}

impl SelectionResult {
    pub fn is_selected(&self, coord: Coord) -> bool {
        self.selected.contains(&coord)
    }
}

/// Runs the selection rule with threshold `epsilon` (a fraction of total
/// variance, e.g. 0.005 for 0.5 %).
///
/// A feature survives the third step only if some instantiation has strictly
/// lower predicted error than its exclusion (`value = 0`). Integer features
/// without an exclusion value in their domain skip that step and only
/// receive a best instantiation.
pub fn select_features(
    report: &ImportanceReport,
    marginals: &FeatureMarginals,
    epsilon: f64,
) -> Result<SelectionResult, FanovaError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(FanovaError::InvalidQuery(format!(
            "epsilon {epsilon} outside (0, 1]"
        )));
    }
    let features: Vec<Coord> = Coord::ALL
        .iter()
        .copied()
        .filter(|c| c.is_binary_feature() || c.is_integer_feature())
        .collect();

    let preselected_main: Vec<Coord> = features
        .iter()
        .copied()
        .filter(|&c| report.main_effect(c) > epsilon)
        .collect();
    let preselected_pairwise: Vec<Coord> = features
        .iter()
        .copied()
        .filter(|&i| {
            features
                .iter()
                .any(|&j| j != i && report.pairwise_effect(i, j) > epsilon)
        })
        .collect();

    let mut selected = Vec::new();
    for &coord in &features {
        if !(preselected_main.contains(&coord) || preselected_pairwise.contains(&coord)) {
            continue;
        }
        let Some(per_value) = marginals.values_of(coord) else {
            continue;
        };
        let exclusion = per_value.iter().find(|m| m.values == [0]).map(|m| m.mean);
        let keep = match exclusion {
            // inclusion must strictly beat exclusion somewhere; ties lose
            Some(at_zero) => per_value
                .iter()
                .any(|m| m.values != [0] && m.mean < at_zero),
            // no exclusion value in the domain: the comparison is undefined
            // and the feature passes straight through
            None => true,
        };
        if keep {
            selected.push(coord);
        }
    }

    let binary: Vec<Coord> = selected
        .iter()
        .copied()
        .filter(|c| c.is_binary_feature())
        .collect();
    let mut integer = Vec::new();
    for &coord in selected.iter().filter(|c| c.is_integer_feature()) {
        let per_value = marginals.values_of(coord).ok_or_else(|| {
            FanovaError::InvalidQuery(format!("no marginals for {}", coord.key()))
        })?;
        let best = per_value
            .iter()
            .filter(|m| m.values != [0])
            .min_by(|a, b| a.mean.partial_cmp(&b.mean).unwrap())
            .ok_or_else(|| {
                FanovaError::InvalidQuery(format!("empty domain for {}", coord.key()))
            })?;
        integer.push((coord, best.values[0]));
    }

    Ok(SelectionResult {
        preselected_main,
        preselected_pairwise,
        selected,
        binary,
        integer,
        epsilon,
    })
}
