//! Marginal performance prediction and variance decomposition.
//!
//! Everything here is exact leaf-box arithmetic under the unit-uniform
//! measure on the configuration space: no sampling anywhere. Per tree, the
//! variance splits into main effects (one coordinate) and pairwise
//! interaction effects; importances are per-tree variance fractions averaged
//! across trees.

use super::forest::PerformanceForest;
use super::FanovaError;
use crate::feature_space::{Coord, FeatureConfig, N_COORDS};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Mean and across-tree spread of the performance of a partial
/// instantiation, averaged over all free coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalPrediction {
    pub subset: Vec<Coord>,
    pub values: Vec<u32>,
    pub mean: f64,
    /// population standard deviation over trees (0 for a 1-tree forest)
    pub std: f64,
}

/// Variance decomposition into main and pairwise effects, as fractions of
/// the total performance variance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// mean over trees of the per-tree total variance
    pub total_variance: f64,
    /// `F_{i}` per coordinate, serialization order
    pub main_effects: Vec<(Coord, f64)>,
    /// `F_{i,j}` for i < j in serialization order
    pub pairwise_effects: Vec<(Coord, Coord, f64)>,
    pub main_effect_sum: f64,
}

impl ImportanceReport {
    pub fn main_effect(&self, coord: Coord) -> f64 {
        self.main_effects
            .iter()
            .find(|(c, _)| *c == coord)
            .map(|(_, f)| *f)
            .unwrap_or(0.0)
    }

    pub fn pairwise_effect(&self, a: Coord, b: Coord) -> f64 {
        self.pairwise_effects
            .iter()
            .find(|(x, y, _)| (*x == a && *y == b) || (*x == b && *y == a))
            .map(|(_, _, f)| *f)
            .unwrap_or(0.0)
    }
}

fn mean_and_pop_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Exact marginal performance of a partial instantiation: per tree the
/// domain-weighted average of leaf values over every configuration
/// consistent with the fixed coordinates, then mean and spread over trees.
pub fn marginal(
    forest: &PerformanceForest,
    fixed: &[(Coord, u32)],
) -> Result<MarginalPrediction, FanovaError> {
    if fixed.is_empty() {
        return Err(FanovaError::InvalidQuery("empty subset".into()));
    }
    let mut fixed_idx = Vec::with_capacity(fixed.len());
    for &(coord, value) in fixed {
        if fixed.iter().filter(|(c, _)| *c == coord).count() > 1 {
            return Err(FanovaError::InvalidQuery(format!(
                "coordinate {} fixed twice",
                coord.key()
            )));
        }
        let pos = forest
            .space
            .domain(coord)
            .iter()
            .position(|v| *v == value)
            .ok_or_else(|| {
                FanovaError::InvalidQuery(format!("{} = {value} outside domain", coord.key()))
            })?;
        fixed_idx.push((coord.index(), pos as u16));
    }
    let per_tree: Vec<f64> = forest
        .trees
        .iter()
        .map(|t| t.marginal(&forest.domain_sizes, &fixed_idx))
        .collect();
    let (mean, std) = mean_and_pop_std(&per_tree);
    Ok(MarginalPrediction {
        subset: fixed.iter().map(|(c, _)| *c).collect(),
        values: fixed.iter().map(|(_, v)| *v).collect(),
        mean,
        std,
    })
}

/// Forest point prediction of one full configuration, with tree spread.
pub fn predict_with_spread(
    forest: &PerformanceForest,
    config: &FeatureConfig,
) -> Result<(f64, f64), FanovaError> {
    let x = forest.config_indices(config)?;
    let per_tree: Vec<f64> = forest.trees.iter().map(|t| t.predict(&x)).collect();
    Ok(mean_and_pop_std(&per_tree))
}

/// Atomic intervals of one coordinate: the partition of the domain induced
/// by every leaf boundary, as (start_idx, len) pairs. Marginals over that
/// coordinate are constant inside each atom.
fn atoms(
    forest_tree: &super::tree::RegressionTree,
    coord: usize,
    domain_size: usize,
) -> Vec<(u16, u16)> {
    let mut cuts: Vec<u16> = vec![0, domain_size as u16];
    for leaf in &forest_tree.leaves {
        let (lo, hi) = leaf.ranges[coord];
        cuts.push(lo);
        cuts.push(hi + 1);
    }
    cuts.sort_unstable();
    cuts.dedup();
    cuts.windows(2).map(|w| (w[0], w[1] - w[0])).collect()
}

fn atom_index(atom_list: &[(u16, u16)], start: u16) -> usize {
    atom_list.partition_point(|&(s, _)| s < start)
}

struct TreeDecomposition {
    total_variance: f64,
    /// V_{i} per coordinate
    main: Vec<f64>,
    /// V_{i,j} keyed by (i, j), i < j
    pairs: BTreeMap<(usize, usize), f64>,
}

/// Single-tree exact functional decomposition into mains and pairs.
fn decompose_tree(tree: &super::tree::RegressionTree, domain_sizes: &[usize]) -> TreeDecomposition {
    let z = domain_sizes.len();
    let (grand_mean, second_moment) = tree.moments(domain_sizes);
    let total_variance = (second_moment - grand_mean * grand_mean).max(0.0);

    // per-coordinate atoms and leaf coverage in atom space
    let atom_lists: Vec<Vec<(u16, u16)>> =
        (0..z).map(|c| atoms(tree, c, domain_sizes[c])).collect();

    // per-leaf weight share of every coordinate: frac[c] = box_len / |D_c|
    let leaf_fracs: Vec<Vec<f64>> = tree
        .leaves
        .iter()
        .map(|l| {
            l.ranges
                .iter()
                .enumerate()
                .map(|(c, &(lo, hi))| f64::from(hi - lo + 1) / domain_sizes[c] as f64)
                .collect()
        })
        .collect();
    let leaf_full_weight: Vec<f64> = leaf_fracs.iter().map(|f| f.iter().product()).collect();

    // marginal means per atom of each coordinate via 1-D difference arrays
    let mut atom_marginals: Vec<Vec<f64>> = Vec::with_capacity(z);
    for c in 0..z {
        let list = &atom_lists[c];
        let mut diff = vec![0.0; list.len() + 1];
        for (li, leaf) in tree.leaves.iter().enumerate() {
            let (lo, hi) = leaf.ranges[c];
            let contribution = leaf.value * leaf_full_weight[li] / leaf_fracs[li][c];
            let a0 = atom_index(list, lo);
            let a1 = atom_index(list, hi + 1);
            diff[a0] += contribution;
            diff[a1] -= contribution;
        }
        let mut acc = 0.0;
        let marg: Vec<f64> = diff[..list.len()]
            .iter()
            .map(|d| {
                acc += d;
                acc
            })
            .collect();
        atom_marginals.push(marg);
    }

    let mut main = vec![0.0; z];
    for c in 0..z {
        if domain_sizes[c] < 2 {
            continue;
        }
        let mut v = 0.0;
        for (ai, &(_, len)) in atom_lists[c].iter().enumerate() {
            let f_i = atom_marginals[c][ai] - grand_mean;
            v += f64::from(len) / domain_sizes[c] as f64 * f_i * f_i;
        }
        main[c] = v;
    }

    let mut pairs = BTreeMap::new();
    for i in 0..z {
        if domain_sizes[i] < 2 {
            continue;
        }
        for j in i + 1..z {
            if domain_sizes[j] < 2 {
                continue;
            }
            let (rows, cols) = (&atom_lists[i], &atom_lists[j]);
            // 2-D difference array of pair marginals over atom rectangles
            let mut diff = vec![vec![0.0; cols.len() + 1]; rows.len() + 1];
            for (li, leaf) in tree.leaves.iter().enumerate() {
                let (ilo, ihi) = leaf.ranges[i];
                let (jlo, jhi) = leaf.ranges[j];
                let contribution =
                    leaf.value * leaf_full_weight[li] / (leaf_fracs[li][i] * leaf_fracs[li][j]);
                let r0 = atom_index(rows, ilo);
                let r1 = atom_index(rows, ihi + 1);
                let c0 = atom_index(cols, jlo);
                let c1 = atom_index(cols, jhi + 1);
                diff[r0][c0] += contribution;
                diff[r0][c1] -= contribution;
                diff[r1][c0] -= contribution;
                diff[r1][c1] += contribution;
            }
            let mut v = 0.0;
            let mut row_acc = vec![0.0; cols.len()];
            for (r, &(_, rlen)) in rows.iter().enumerate() {
                let mut acc = 0.0;
                for (c, &(_, clen)) in cols.iter().enumerate() {
                    acc += diff[r][c];
                    row_acc[c] += acc;
                    let pair_marg = row_acc[c];
                    let f_ij = pair_marg - atom_marginals[i][r] - atom_marginals[j][c] + grand_mean;
                    let w = f64::from(rlen) / domain_sizes[i] as f64 * f64::from(clen)
                        / domain_sizes[j] as f64;
                    v += w * f_ij * f_ij;
                }
            }
            pairs.insert((i, j), v);
        }
    }

    TreeDecomposition {
        total_variance,
        main,
        pairs,
    }
}

/// Variance decomposition of the fitted forest into main and pairwise
/// importances as fractions of total variance, per-tree ratios averaged
/// over trees.
/// Trees whose bootstrap sample came out constant carry no variance and are
/// skipped; if every tree is constant the history is degenerate.
pub fn decompose(forest: &PerformanceForest) -> Result<ImportanceReport, FanovaError> {
    let mut decs: Vec<TreeDecomposition> = Vec::with_capacity(forest.trees.len());
    for tree in &forest.trees {
        decs.push(decompose_tree(tree, &forest.domain_sizes));
    }
    let live: Vec<&TreeDecomposition> = decs.iter().filter(|d| d.total_variance > 0.0).collect();
    if live.is_empty() {
        return Err(FanovaError::DegenerateHistory);
    }
    let n_live = live.len() as f64;
    let total_variance = live.iter().map(|d| d.total_variance).sum::<f64>() / n_live;

    let mut main_effects = Vec::with_capacity(N_COORDS);
    for (ci, coord) in Coord::ALL.iter().enumerate() {
        let f = live
            .iter()
            .map(|d| d.main[ci] / d.total_variance)
            .sum::<f64>()
            / n_live;
        main_effects.push((*coord, f));
    }
    let mut pairwise_effects = Vec::new();
    for i in 0..N_COORDS {
        for j in i + 1..N_COORDS {
            let f = live
                .iter()
                .map(|d| d.pairs.get(&(i, j)).copied().unwrap_or(0.0) / d.total_variance)
                .sum::<f64>()
                / n_live;
            pairwise_effects.push((Coord::ALL[i], Coord::ALL[j], f));
        }
    }
    let main_effect_sum = main_effects.iter().map(|(_, f)| f).sum();
    Ok(ImportanceReport {
        total_variance,
        main_effects,
        pairwise_effects,
        main_effect_sum,
    })
}

/// Exhaustive decomposition over every coordinate subset, for small spaces:
/// returns the importance fraction of each subset of splittable coordinates
/// (singleton-domain coordinates cannot carry variance). The fractions sum
/// to 1 per the variance-partition identity.
pub fn decompose_all_subsets(
    forest: &PerformanceForest,
) -> Result<Vec<(Vec<Coord>, f64)>, FanovaError> {
    let free: Vec<usize> = (0..N_COORDS)
        .filter(|&c| forest.domain_sizes[c] > 1)
        .collect();
    let combos: u128 = free
        .iter()
        .map(|&c| forest.domain_sizes[c] as u128 + 1)
        .product();
    if free.len() > 16 || combos > 100_000 {
        return Err(FanovaError::SpaceTooLarge);
    }

    let n_masks = 1usize << free.len();
    let mut fractions = vec![0.0; n_masks];
    let mut live_trees = 0usize;

    for tree in &forest.trees {
        let (grand_mean, second) = tree.moments(&forest.domain_sizes);
        let total = second - grand_mean * grand_mean;
        if total <= 0.0 {
            continue;
        }
        live_trees += 1;

        // f_U tables in ascending subset-size order, indexed row-major over
        // the subset's domain values
        let mut tables: Vec<Vec<f64>> = vec![Vec::new(); n_masks];
        let mut masks: Vec<usize> = (1..n_masks).collect();
        masks.sort_by_key(|m| m.count_ones());
        for &mask in &masks {
            let coords: Vec<usize> = (0..free.len()).filter(|b| mask >> b & 1 == 1).collect();
            let sizes: Vec<usize> = coords
                .iter()
                .map(|&b| forest.domain_sizes[free[b]])
                .collect();
            let n_combo: usize = sizes.iter().product();
            let mut table = vec![0.0; n_combo];
            let mut variance = 0.0;
            for (combo, slot) in table.iter_mut().enumerate() {
                // unpack row-major combo into per-coordinate indices
                let mut rest = combo;
                let mut fixed = Vec::with_capacity(coords.len());
                let mut idxs = Vec::with_capacity(coords.len());
                for (pos, &b) in coords.iter().enumerate() {
                    let v = rest % sizes[pos];
                    rest /= sizes[pos];
                    idxs.push(v);
                    fixed.push((free[b], v as u16));
                }
                let mut f = tree.marginal(&forest.domain_sizes, &fixed) - grand_mean;
                // subtract every proper nonempty sub-effect
                let mut sub = (mask - 1) & mask;
                while sub != 0 {
                    let sub_coords: Vec<usize> =
                        (0..free.len()).filter(|b| sub >> b & 1 == 1).collect();
                    let mut sub_combo = 0;
                    let mut stride = 1;
                    for &b in &sub_coords {
                        let pos = coords.iter().position(|x| *x == b).unwrap();
                        sub_combo += idxs[pos] * stride;
                        stride *= sizes[pos];
                    }
                    f -= tables[sub][sub_combo];
                    sub = (sub - 1) & mask;
                }
                *slot = f;
                variance += f * f;
            }
            variance /= n_combo as f64;
            fractions[mask] += variance / total;
            tables[mask] = table;
        }
    }
    if live_trees == 0 {
        return Err(FanovaError::DegenerateHistory);
    }

    let mut out = Vec::with_capacity(n_masks - 1);
    for mask in 1..n_masks {
        let coords: Vec<Coord> = (0..free.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| Coord::ALL[free[b]])
            .collect();
        out.push((coords, fractions[mask] / live_trees as f64));
    }
    Ok(out)
}
