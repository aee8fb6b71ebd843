use super::*;
use crate::feature_space::{Coord, FeatureConfig, SearchSpace, N_COORDS};
use crate::tpe::TrialHistory;
use proptest::prelude::*;
use std::collections::HashMap;

/// Space where only the given binary coordinates are free; every other
/// coordinate is frozen to a single value.
fn binary_space(free: &[Coord]) -> SearchSpace {
    let mut space = SearchSpace::default();
    for coord in Coord::ALL {
        if free.contains(&coord) {
            assert!(coord.is_binary_feature());
            continue;
        }
        let v = match coord {
            Coord::PastDays | Coord::WeeklyLags => 1,
            Coord::N1 => 100,
            _ => 0,
        };
        space.set_domain(coord, vec![v]).unwrap();
    }
    space
}

/// All configurations of a space, row-major over the coordinate domains.
fn configs_of(space: &SearchSpace) -> Vec<FeatureConfig> {
    let mut out = vec![[0u32; N_COORDS]];
    for (i, coord) in Coord::ALL.iter().enumerate() {
        let mut next = Vec::new();
        for values in &out {
            for &v in space.domain(*coord) {
                let mut n = *values;
                n[i] = v;
                next.push(n);
            }
        }
        out = next;
    }
    out.iter().map(FeatureConfig::from_values).collect()
}

fn factorial_history(
    space: &SearchSpace,
    objective: impl Fn(&FeatureConfig) -> f64,
) -> TrialHistory {
    let mut history = TrialHistory::new(space.clone());
    for c in configs_of(space) {
        history.push(c, objective(&c), 0.0);
    }
    history
}

fn single_pure_tree() -> ForestSettings {
    ForestSettings {
        n_trees: 1,
        min_leaf: 1,
        bootstrap: false,
        feature_subsample: Some(N_COORDS),
        seed: 0,
    }
}

/// Brute-force functional ANOVA by direct summation over the full grid,
/// driven only by point predictions (independent of the leaf-box path).
/// Returns (total variance, V_U for every nonempty subset of `free`).
fn brute_force_anova(
    predict: &dyn Fn(&FeatureConfig) -> f64,
    space: &SearchSpace,
    free: &[Coord],
) -> (f64, HashMap<Vec<Coord>, f64>) {
    let configs = configs_of(space);
    let values: Vec<f64> = configs.iter().map(predict).collect();
    let n = values.len() as f64;
    let grand = values.iter().sum::<f64>() / n;
    let total = values
        .iter()
        .map(|v| (v - grand) * (v - grand))
        .sum::<f64>()
        / n;

    let n_masks = 1usize << free.len();
    let mut effects: Vec<HashMap<Vec<u32>, f64>> = vec![HashMap::new(); n_masks];
    let mut variances: HashMap<Vec<Coord>, f64> = HashMap::new();
    let mut masks: Vec<usize> = (1..n_masks).collect();
    masks.sort_by_key(|m| m.count_ones());
    for mask in masks {
        let coords: Vec<Coord> = (0..free.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| free[b])
            .collect();
        // group configurations by their values on `coords`
        let mut sums: HashMap<Vec<u32>, (f64, usize)> = HashMap::new();
        for (c, v) in configs.iter().zip(&values) {
            let key: Vec<u32> = coords.iter().map(|&cc| c.value(cc)).collect();
            let e = sums.entry(key).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
        let mut table = HashMap::new();
        let mut variance = 0.0;
        for (key, (sum, count)) in &sums {
            let mut f = sum / *count as f64 - grand;
            let mut sub = (mask - 1) & mask;
            while sub != 0 {
                let sub_key: Vec<u32> = (0..free.len())
                    .filter(|b| sub >> b & 1 == 1)
                    .map(|b| key[coords.iter().position(|c| *c == free[b]).unwrap()])
                    .collect();
                f -= effects[sub][&sub_key];
                sub = (sub - 1) & mask;
            }
            table.insert(key.clone(), f);
            variance += f * f;
        }
        variance /= sums.len() as f64;
        effects[mask] = table;
        variances.insert(coords, variance);
    }
    (total, variances)
}

#[test]
fn constant_history_is_degenerate() {
    let space = binary_space(&[Coord::PriceF, Coord::LoadB]);
    let history = factorial_history(&space, |_| 7.5);
    assert!(matches!(
        fit_forest(&history, &ForestSettings::default()),
        Err(FanovaError::DegenerateHistory)
    ));
}

#[test]
fn single_pure_tree_interpolates_factorial() {
    let space = binary_space(&[Coord::PriceF, Coord::LoadB]);
    let objective = |c: &FeatureConfig| {
        1.0 + 2.0 * c.use_price_f as u8 as f64 + 5.0 * c.use_load_b as u8 as f64
    };
    let history = factorial_history(&space, objective);
    let forest = fit_forest(&history, &single_pure_tree()).unwrap();
    for c in configs_of(&space) {
        assert_eq!(forest.predict(&c).unwrap(), objective(&c));
    }
}

#[test]
fn seeded_fit_reproducible() {
    let space = binary_space(&[Coord::PriceF, Coord::LoadB, Coord::LoadF]);
    let history = factorial_history(&space, |c| {
        c.use_price_f as u8 as f64 * 3.0 + c.use_load_f as u8 as f64
    });
    let settings = ForestSettings {
        n_trees: 5,
        ..ForestSettings::default()
    };
    let a = fit_forest(&history, &settings).unwrap();
    let b = fit_forest(&history, &settings).unwrap();
    for c in configs_of(&space) {
        assert_eq!(a.predict(&c).unwrap(), b.predict(&c).unwrap());
    }
}

#[test]
fn forest_skips_failed_trials() {
    let space = binary_space(&[Coord::PriceF]);
    let mut history = TrialHistory::new(space.clone());
    for (i, c) in configs_of(&space).iter().enumerate() {
        history.push(*c, i as f64, 0.0);
        history.push(*c, f64::INFINITY, 0.0);
    }
    let forest = fit_forest(&history, &single_pure_tree()).unwrap();
    assert!(forest.predict(&configs_of(&space)[0]).unwrap().is_finite());
}

#[test]
fn marginal_full_instantiation_equals_point_prediction() {
    let space = binary_space(&[Coord::PriceF, Coord::LoadB]);
    let history = factorial_history(&space, |c| {
        1.0 + 4.0 * c.use_price_f as u8 as f64 - 2.0 * c.use_load_b as u8 as f64
    });
    let forest = fit_forest(&history, &single_pure_tree()).unwrap();
    for c in configs_of(&space) {
        let fixed: Vec<(Coord, u32)> = Coord::ALL.iter().map(|&cc| (cc, c.value(cc))).collect();
        let m = marginal(&forest, &fixed).unwrap();
        assert_eq!(m.mean, forest.predict(&c).unwrap());
        assert_eq!(m.std, 0.0); // single tree
    }
}

#[test]
fn marginal_rejects_bad_queries() {
    let space = binary_space(&[Coord::PriceF]);
    let history = factorial_history(&space, |c| c.use_price_f as u8 as f64);
    let forest = fit_forest(&history, &single_pure_tree()).unwrap();
    assert!(matches!(
        marginal(&forest, &[]),
        Err(FanovaError::InvalidQuery(_))
    ));
    assert!(matches!(
        marginal(&forest, &[(Coord::PriceF, 7)]),
        Err(FanovaError::InvalidQuery(_))
    ));
}

#[test]
fn single_relevant_feature_takes_all_variance() {
    let space = binary_space(&[Coord::PriceF, Coord::LoadB, Coord::LoadF]);
    let objective = |c: &FeatureConfig| 5.0 + 3.0 * c.use_price_f as u8 as f64;
    let history = factorial_history(&space, objective);
    let forest = fit_forest(&history, &single_pure_tree()).unwrap();
    let report = decompose(&forest).unwrap();

    assert!((report.main_effect(Coord::PriceF) - 1.0).abs() < 1e-10);
    for coord in [Coord::LoadB, Coord::LoadF] {
        assert!(report.main_effect(coord).abs() < 1e-10);
    }
    for (_, _, f) in &report.pairwise_effects {
        assert!(f.abs() < 1e-10);
    }

    // brute-force oracle agreement
    let free = [Coord::PriceF, Coord::LoadB, Coord::LoadF];
    let predict = |c: &FeatureConfig| forest.predict(c).unwrap();
    let (total, oracle) = brute_force_anova(&predict, &space, &free);
    assert!((report.total_variance - total).abs() < 1e-10);
    assert!((oracle[&vec![Coord::PriceF]] / total - 1.0).abs() < 1e-10);
}

#[test]
fn additive_objective_importance_ratio_is_square_of_coefficients() {
    let space = binary_space(&[Coord::PriceF, Coord::LoadB]);
    let (a, b) = (2.0, 1.0);
    let objective =
        |c: &FeatureConfig| a * c.use_price_f as u8 as f64 + b * c.use_load_b as u8 as f64;
    let history = factorial_history(&space, objective);
    let forest = fit_forest(&history, &single_pure_tree()).unwrap();
    let report = decompose(&forest).unwrap();

    let f1 = report.main_effect(Coord::PriceF);
    let f2 = report.main_effect(Coord::LoadB);
    assert!(
        (f1 / f2 - (a * a) / (b * b)).abs() < 1e-8,
        "ratio {}",
        f1 / f2
    );
    assert!(report.pairwise_effect(Coord::PriceF, Coord::LoadB).abs() < 1e-10);
}

#[test]
fn decomposition_matches_brute_force_on_interaction() {
    // pure XOR interaction: no main effects, everything in the pair
    let space = binary_space(&[Coord::PriceF, Coord::LoadB]);
    let objective = |c: &FeatureConfig| ((c.use_price_f as u8) ^ (c.use_load_b as u8)) as f64 * 4.0;
    let history = factorial_history(&space, objective);
    let forest = fit_forest(&history, &single_pure_tree()).unwrap();
    let report = decompose(&forest).unwrap();

    let predict = |c: &FeatureConfig| forest.predict(c).unwrap();
    let free = [Coord::PriceF, Coord::LoadB];
    let (total, oracle) = brute_force_anova(&predict, &space, &free);
    assert!((report.total_variance - total).abs() < 1e-10);
    assert!(
        (report.main_effect(Coord::PriceF) - oracle[&vec![Coord::PriceF]] / total).abs() < 1e-10
    );
    assert!(
        (report.pairwise_effect(Coord::PriceF, Coord::LoadB)
            - oracle[&vec![Coord::PriceF, Coord::LoadB]] / total)
            .abs()
            < 1e-10
    );
    assert!(report.main_effect(Coord::PriceF).abs() < 1e-10);
    assert!((report.pairwise_effect(Coord::PriceF, Coord::LoadB) - 1.0).abs() < 1e-10);
}

#[test]
fn all_subset_fractions_sum_to_one() {
    let space = binary_space(&[Coord::PriceF, Coord::LoadB, Coord::LoadF]);
    let objective = |c: &FeatureConfig| {
        2.0 * c.use_price_f as u8 as f64
            + 0.5 * c.use_load_b as u8 as f64
            + ((c.use_price_f as u8) & (c.use_load_f as u8)) as f64
    };
    let history = factorial_history(&space, objective);
    let forest = fit_forest(&history, &single_pure_tree()).unwrap();
    let subsets = decompose_all_subsets(&forest).unwrap();
    let total: f64 = subsets.iter().map(|(_, f)| f).sum();
    assert!(
        (total - 1.0).abs() < 1e-10,
        "subset fractions sum to {total}"
    );

    // and each V_U matches the brute-force oracle
    let predict = |c: &FeatureConfig| forest.predict(c).unwrap();
    let free = [Coord::PriceF, Coord::LoadB, Coord::LoadF];
    let (total_var, oracle) = brute_force_anova(&predict, &space, &free);
    for (coords, fraction) in &subsets {
        let expect = oracle[coords] / total_var;
        assert!(
            (fraction - expect).abs() < 1e-10,
            "{coords:?}: {fraction} vs oracle {expect}"
        );
    }
}

#[test]
fn marginalization_consistency_with_grand_mean() {
    // domain-weighted average of single-coordinate marginals equals the
    // grand mean computed by exhaustive enumeration of point predictions
    let space = binary_space(&[Coord::PriceF, Coord::LoadB, Coord::LoadF]);
    let history = factorial_history(&space, |c| {
        1.0 + 2.0 * c.use_price_f as u8 as f64
            + 0.7 * c.use_load_b as u8 as f64 * c.use_load_f as u8 as f64
    });
    let settings = ForestSettings {
        n_trees: 7,
        min_leaf: 1,
        bootstrap: true,
        feature_subsample: Some(N_COORDS),
        seed: 4,
    };
    let forest = fit_forest(&history, &settings).unwrap();
    let configs = configs_of(&space);
    let grand: f64 = configs
        .iter()
        .map(|c| forest.predict(c).unwrap())
        .sum::<f64>()
        / configs.len() as f64;
    for coord in [Coord::PriceF, Coord::LoadB, Coord::LoadF] {
        let domain = space.domain(coord).to_vec();
        let avg: f64 = domain
            .iter()
            .map(|&v| marginal(&forest, &[(coord, v)]).unwrap().mean)
            .sum::<f64>()
            / domain.len() as f64;
        assert!((avg - grand).abs() < 1e-10, "{coord:?}: {avg} vs {grand}");
    }
}

#[test]
fn degenerate_forest_variance_rejected_in_decompose() {
    // two samples with min_leaf 3: the tree cannot split, variance is zero
    let space = binary_space(&[Coord::PriceF]);
    let mut history = TrialHistory::new(space.clone());
    let configs = configs_of(&space);
    history.push(configs[0], 1.0, 0.0);
    history.push(configs[1], 2.0, 0.0);
    let forest = fit_forest(
        &history,
        &ForestSettings {
            n_trees: 1,
            min_leaf: 3,
            bootstrap: false,
            feature_subsample: Some(N_COORDS),
            seed: 0,
        },
    )
    .unwrap();
    assert!(matches!(
        decompose(&forest),
        Err(FanovaError::DegenerateHistory)
    ));
}

fn selection_fixture(
    objective: impl Fn(&FeatureConfig) -> f64,
) -> (PerformanceForest, ImportanceReport, FeatureMarginals) {
    let space = binary_space(&[Coord::PriceF, Coord::LoadB, Coord::LoadF]);
    let history = factorial_history(&space, objective);
    let forest = fit_forest(&history, &single_pure_tree()).unwrap();
    let report = decompose(&forest).unwrap();
    let marginals = feature_marginals(&forest).unwrap();
    (forest, report, marginals)
}

#[test]
fn selection_empty_when_everything_below_threshold() {
    let (_, report, marginals) = selection_fixture(|c| {
        0.001 * c.use_price_f as u8 as f64 + 5.0 + 0.0005 * c.use_load_b as u8 as f64
    });
    // epsilon = 1.0 dominates every effect
    let result = select_features(&report, &marginals, 1.0).unwrap();
    assert!(result.selected.is_empty());
    assert!(result.binary.is_empty());
    assert!(result.integer.is_empty());
}

#[test]
fn selection_drops_feature_that_worsens_performance() {
    // including load_B strictly increases error: big main effect, but the
    // inclusion-beats-exclusion step must reject it
    let (_, report, marginals) = selection_fixture(|c| {
        10.0 + 4.0 * c.use_load_b as u8 as f64 - 3.0 * c.use_price_f as u8 as f64
    });
    assert!(report.main_effect(Coord::LoadB) > 0.005);
    let result = select_features(&report, &marginals, 0.005).unwrap();
    assert!(result.preselected_main.contains(&Coord::LoadB));
    assert!(!result.is_selected(Coord::LoadB));
    assert!(result.is_selected(Coord::PriceF));
    assert_eq!(result.binary, vec![Coord::PriceF]);
}

#[test]
fn selection_keeps_integer_features_without_exclusion_value() {
    // past_days has no 0 in its domain: it passes the third step untouched
    // and carries its error-minimizing instantiation
    let mut space = SearchSpace::default();
    for coord in Coord::ALL {
        match coord {
            Coord::PastDays => space.set_domain(coord, vec![1, 2, 3]).unwrap(),
            Coord::PriceF => {}
            Coord::WeeklyLags => space.set_domain(coord, vec![1]).unwrap(),
            Coord::N1 => space.set_domain(coord, vec![100]).unwrap(),
            _ => space.set_domain(coord, vec![0]).unwrap(),
        }
    }
    let objective = |c: &FeatureConfig| {
        (c.past_days as f64 - 2.0).powi(2) + 1.0 - 0.8 * c.use_price_f as u8 as f64
    };
    let history = factorial_history(&space, objective);
    let forest = fit_forest(&history, &single_pure_tree()).unwrap();
    let report = decompose(&forest).unwrap();
    let marginals = feature_marginals(&forest).unwrap();
    let result = select_features(&report, &marginals, 0.005).unwrap();
    assert!(result.is_selected(Coord::PastDays));
    assert_eq!(result.integer, vec![(Coord::PastDays, 2)]);
    assert_eq!(result.binary, vec![Coord::PriceF]);
}

#[test]
fn selection_monotone_in_epsilon() {
    let (_, report, marginals) = selection_fixture(|c| {
        12.0 - 2.0 * c.use_price_f as u8 as f64 - 0.4 * c.use_load_f as u8 as f64
            + 0.05 * (c.use_price_f as u8 & c.use_load_b as u8) as f64
    });
    let mut previous: Option<Vec<Coord>> = None;
    for epsilon in [0.001, 0.01, 0.05, 0.2, 0.8] {
        let result = select_features(&report, &marginals, epsilon).unwrap();
        if let Some(prev) = &previous {
            // larger epsilon never adds features
            assert!(result.selected.iter().all(|c| prev.contains(c)));
        }
        previous = Some(result.selected);
    }
}

#[test]
fn importance_render_lists_mains_descending() {
    let (_, report, _) = selection_fixture(|c| {
        10.0 - 3.0 * c.use_price_f as u8 as f64 - 1.0 * c.use_load_f as u8 as f64
    });
    let text = render_importance(&report);
    assert!(text.contains("All main effects"));
    let pf = text.find("F prices").unwrap();
    let lf = text.find("F load").unwrap();
    assert!(pf < lf, "stronger effect must print first:\n{text}");
}

#[test]
fn selection_render_mentions_outcome() {
    let (_, report, marginals) = selection_fixture(|c| 10.0 - 3.0 * c.use_price_f as u8 as f64);
    let result = select_features(&report, &marginals, 0.005).unwrap();
    let text = render_selection(&result);
    assert!(text.contains("theta_pF"));
    assert!(text.contains("Binary features"));
}

#[test]
fn pairwise_effects_match_subset_decomposition_on_multivalued_domains() {
    // exercises the atom partitioning with domains of size 6, 3 and 2 and a
    // bootstrapped multi-tree forest; the all-subsets path computes the same
    // quantities through plain marginal calls
    let mut space = SearchSpace::default();
    for coord in Coord::ALL {
        match coord {
            Coord::PastDays | Coord::WeeklyLags | Coord::PriceF => {}
            Coord::N1 => space.set_domain(coord, vec![100]).unwrap(),
            _ => space.set_domain(coord, vec![0]).unwrap(),
        }
    }
    let objective = |c: &FeatureConfig| {
        (c.past_days as f64 - 2.5).powi(2) * 0.7
            + 1.3 * c.weekly_lags as f64 * c.use_price_f as u8 as f64
            + ((c.past_days * 7 + c.weekly_lags * 3) % 5) as f64 * 0.21
    };
    let history = factorial_history(&space, objective);
    let forest = fit_forest(
        &history,
        &ForestSettings {
            n_trees: 6,
            min_leaf: 2,
            bootstrap: true,
            feature_subsample: Some(N_COORDS),
            seed: 11,
        },
    )
    .unwrap();

    let report = decompose(&forest).unwrap();
    let subsets = decompose_all_subsets(&forest).unwrap();
    let lookup = |coords: &[Coord]| -> f64 {
        subsets
            .iter()
            .find(|(c, _)| c.as_slice() == coords)
            .map(|(_, f)| *f)
            .unwrap()
    };
    for coord in [Coord::PastDays, Coord::WeeklyLags, Coord::PriceF] {
        let expect = lookup(&[coord]);
        let got = report.main_effect(coord);
        assert!((got - expect).abs() < 1e-10, "{coord:?}: {got} vs {expect}");
    }
    for (a, b) in [
        (Coord::PastDays, Coord::WeeklyLags),
        (Coord::PastDays, Coord::PriceF),
        (Coord::WeeklyLags, Coord::PriceF),
    ] {
        let expect = lookup(&[a, b]);
        let got = report.pairwise_effect(a, b);
        assert!((got - expect).abs() < 1e-10, "{a:?}/{b:?}: {got} vs {expect}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn random_forests_keep_marginal_consistency(seed in 0u64..1000) {
        let space = binary_space(&[Coord::PriceF, Coord::LoadB]);
        let mut history = TrialHistory::new(space.clone());
        let mut rng_state = seed;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 33) as f64 / (1u64 << 31) as f64
        };
        for c in configs_of(&space) {
            for _ in 0..3 {
                history.push(c, 5.0 + 3.0 * next(), 0.0);
            }
        }
        let forest = fit_forest(&history, &ForestSettings {
            n_trees: 4,
            min_leaf: 1,
            bootstrap: true,
            feature_subsample: Some(N_COORDS),
            seed,
        }).unwrap();
        let configs = configs_of(&space);
        let grand: f64 = configs.iter().map(|c| forest.predict(c).unwrap()).sum::<f64>() / configs.len() as f64;
        let avg = (marginal(&forest, &[(Coord::PriceF, 0)]).unwrap().mean
            + marginal(&forest, &[(Coord::PriceF, 1)]).unwrap().mean) / 2.0;
        prop_assert!((avg - grand).abs() < 1e-10);
    }
}
