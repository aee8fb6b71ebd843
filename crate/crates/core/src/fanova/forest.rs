//! Random-forest performance model over trial histories.

use super::tree::{RegressionTree, TreeParams};
use super::FanovaError;
use crate::feature_space::{Coord, FeatureConfig, SearchSpace};
use crate::tpe::TrialHistory;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Forest fitting settings; defaults are the conventional values for
/// forest-based hyperparameter importance analysis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ForestSettings {
    pub n_trees: usize,
    pub min_leaf: usize,
    pub bootstrap: bool,
    /// Coordinates tried per split; `None` = ceil(sqrt(#splittable coords)).
    pub feature_subsample: Option<usize>,
    pub seed: u64,
}

impl Default for ForestSettings {
    fn default() -> Self {
        Self {
            n_trees: 30,
            min_leaf: 3,
            bootstrap: true,
            feature_subsample: None,
            seed: 0,
        }
    }
}

/// Fitted performance model: trees plus the space they are defined over.
#[derive(Debug, Clone)]
pub struct PerformanceForest {
    pub(super) trees: Vec<RegressionTree>,
    pub(super) space: SearchSpace,
    pub(super) domain_sizes: Vec<usize>,
}

impl PerformanceForest {
    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub(super) fn config_indices(&self, config: &FeatureConfig) -> Result<Vec<u16>, FanovaError> {
        Coord::ALL
            .iter()
            .map(|c| {
                self.space
                    .domain(*c)
                    .iter()
                    .position(|v| *v == config.value(*c))
                    .map(|p| p as u16)
                    .ok_or(FanovaError::ConfigOutsideSpace)
            })
            .collect()
    }

    /// Forest point prediction (mean over trees).
    pub fn predict(&self, config: &FeatureConfig) -> Result<f64, FanovaError> {
        let x = self.config_indices(config)?;
        Ok(self.trees.iter().map(|t| t.predict(&x)).sum::<f64>() / self.trees.len() as f64)
    }
}

/// Fits bootstrap-sampled regression trees to the (config, performance)
/// pairs of a trial history. Non-finite performances (failed trials) are
/// left out; at least two distinct finite performances must remain.
pub fn fit_forest(
    history: &TrialHistory,
    settings: &ForestSettings,
) -> Result<PerformanceForest, FanovaError> {
    let space = history.space().clone();
    let domain_sizes: Vec<usize> = Coord::ALL.iter().map(|c| space.domain(*c).len()).collect();

    let mut xs: Vec<Vec<u16>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for trial in history.trials() {
        if !trial.performance.is_finite() {
            continue;
        }
        let idx: Result<Vec<u16>, FanovaError> = Coord::ALL
            .iter()
            .map(|c| {
                space
                    .domain(*c)
                    .iter()
                    .position(|v| *v == trial.config.value(*c))
                    .map(|p| p as u16)
                    .ok_or(FanovaError::ConfigOutsideSpace)
            })
            .collect();
        xs.push(idx?);
        ys.push(trial.performance);
    }
    {
        let mut distinct = ys.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(FanovaError::DegenerateHistory);
        }
    }

    let splittable = domain_sizes.iter().filter(|&&s| s > 1).count();
    let n_candidates = settings
        .feature_subsample
        .unwrap_or_else(|| (splittable as f64).sqrt().ceil() as usize)
        .max(1);
    let params = TreeParams {
        domain_sizes: &domain_sizes,
        min_leaf: settings.min_leaf.max(1),
        n_candidate_coords: n_candidates,
    };

    let mut trees = Vec::with_capacity(settings.n_trees);
    for t in 0..settings.n_trees {
        // independent per-tree streams keep results identical however tree
        // fitting is scheduled
        let tree_seed = settings
            .seed
            .wrapping_add((t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
        let (bx, by): (Vec<Vec<u16>>, Vec<f64>) = if settings.bootstrap {
            let n = xs.len();
            let picks: Vec<usize> = (0..n).map(|_| (rng.next_u64() as usize) % n).collect();
            (
                picks.iter().map(|&k| xs[k].clone()).collect(),
                picks.iter().map(|&k| ys[k]).collect(),
            )
        } else {
            (xs.clone(), ys.clone())
        };
        trees.push(RegressionTree::fit(&bx, &by, &params, rng));
    }

    Ok(PerformanceForest {
        trees,
        space,
        domain_sizes,
    })
}
