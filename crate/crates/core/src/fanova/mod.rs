//! Forest-based performance modeling, exact marginal predictions, variance
//! decomposition into feature importances, and the selection rule built on
//! top of them.

mod decompose;
mod forest;
mod select;
mod tree;

pub use decompose::{
    decompose, decompose_all_subsets, marginal, predict_with_spread, ImportanceReport,
    MarginalPrediction,
};
pub use forest::{fit_forest, ForestSettings, PerformanceForest};
pub use select::{feature_marginals, select_features, FeatureMarginals, SelectionResult};

use crate::feature_space::Coord;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FanovaError {
    #[error("history holds fewer than 2 distinct finite performances")]
    DegenerateHistory,
    #[error("a history config lies outside the declared search space")]
    ConfigOutsideSpace,
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("space too large for exhaustive subset decomposition")]
    SpaceTooLarge,
}

/// Text rendering of an importance report: total variance, then main effects
/// in descending order, then the pairwise effects above 0.1 %.
pub fn render_importance(report: &ImportanceReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Total performance variance: {:.4} %^2\n\n",
        report.total_variance
    ));
    out.push_str("Contribution to variance\n");
    out.push_str(&format!(
        "  {:<28} {:>7.1}%\n",
        "All main effects",
        100.0 * report.main_effect_sum
    ));
    let mut mains = report.main_effects.clone();
    mains.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    for (coord, f) in &mains {
        out.push_str(&format!("  {:<28} {:>7.1}%\n", coord.label(), 100.0 * f));
    }
    let mut pairs: Vec<_> = report
        .pairwise_effects
        .iter()
        .filter(|(_, _, f)| *f >= 0.001)
        .collect();
    pairs.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
    if !pairs.is_empty() {
        out.push_str("\nPairwise interaction effects (>= 0.1%)\n");
        for (a, b, f) in pairs {
            let label = format!("{} x {}", a.label(), b.label());
            out.push_str(&format!("  {:<28} {:>7.1}%\n", label, 100.0 * f));
        }
    }
    out
}

/// Text rendering of a selection result.
pub fn render_selection(result: &SelectionResult) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Selection threshold: {:.2} % of total variance\n\n",
        100.0 * result.epsilon
    ));
    let list = |coords: &[Coord]| -> String {
        if coords.is_empty() {
            "(none)".to_string()
        } else {
            coords
                .iter()
                .map(|c| c.key())
                .collect::<Vec<_>>()
                .join(", ")
        }
    };
    out.push_str(&format!(
        "Pre-selected by main effect:     {}\n",
        list(&result.preselected_main)
    ));
    out.push_str(&format!(
        "Pre-selected by pairwise effect: {}\n",
        list(&result.preselected_pairwise)
    ));
    out.push_str(&format!(
        "Selected after inclusion check:  {}\n\n",
        list(&result.selected)
    ));
    out.push_str(&format!("Binary features:  {}\n", list(&result.binary)));
    if result.integer.is_empty() {
        out.push_str("Integer features: (none)\n");
    } else {
        out.push_str("Integer features:\n");
        for (coord, best) in &result.integer {
            out.push_str(&format!(
                "  {} -> best instantiation {}\n",
                coord.key(),
                best
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests;
