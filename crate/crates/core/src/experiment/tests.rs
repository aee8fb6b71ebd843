use super::*;
use crate::feature_space::{Coord, FeatureConfig};
use crate::stats::Side;

fn small_config() -> FeatureConfig {
    FeatureConfig {
        past_days: 1,
        weekly_lags: 1,
        use_price_f: true,
        use_load_b: false,
        use_load_f: true,
        use_gen_b: false,
        use_gen_f: false,
        use_holiday_b: false,
        use_holiday_f: false,
        n1: 8,
        n2: 0,
    }
}

/// Fast synthetic study: 120 days, 80/20/20 split, tiny nets.
fn small_study(seed: u64) -> StudySpec {
    StudySpec::parse(&format!(
        "\
data = synth
synth.seed = {seed}
synth.n_days = 120
synth.coupling = 0.9
split.train_days = 80
split.val_days = 20
train.max_epochs = 25
train.patience = 5
train.batch_size = 16
train.seed = 7
"
    ))
    .unwrap()
}

#[test]
fn backtest_covers_every_test_day_once() {
    let spec = small_study(1);
    let (series, split, scaler) = spec.materialize().unwrap();
    let config = small_config();
    let result = run_backtest(&spec, &config, &series, &split, &scaler).unwrap();
    assert_eq!(result.days.len(), 20);
    let dates = result.dates();
    let mut dedup = dates.clone();
    dedup.dedup();
    assert_eq!(dates, dedup);
    assert!(result.days.iter().all(|d| d.predicted.len() == 24));
    assert!(result.smape.is_finite() && result.smape > 0.0);
    assert_eq!(result.error_series().len(), 20 * 24);
}

#[test]
fn backtest_leakage_audit_is_clean() {
    let spec = small_study(2);
    let (series, split, scaler) = spec.materialize().unwrap();
    let result = run_backtest(&spec, &small_config(), &series, &split, &scaler).unwrap();
    let audit = audit_backtest(&result);
    assert_eq!(audit.checked_days, 20);
    assert!(audit.clean(), "violations: {:?}", audit.violations);
    // every retrain saw targets strictly before its forecast day
    for day in &result.days {
        assert!(day.train_last_target < day.date);
    }
}

#[test]
fn backtest_without_test_folding_keeps_training_window_fixed() {
    let mut spec = small_study(3);
    spec.fold_test_days = false;
    let (series, split, scaler) = spec.materialize().unwrap();
    let result = run_backtest(&spec, &small_config(), &series, &split, &scaler).unwrap();
    let last_val = split.validation_range.1;
    assert!(result.days.iter().all(|d| d.train_last_target <= last_val));
}

#[test]
fn backtest_weekly_cadence_reuses_weights() {
    let mut spec = small_study(4);
    spec.cadence_days = 7;
    let (series, split, scaler) = spec.materialize().unwrap();
    let result = run_backtest(&spec, &small_config(), &series, &split, &scaler).unwrap();
    assert_eq!(result.days.len(), 20);
    assert_eq!(result.cadence_days, 7);
}

#[test]
fn backtest_warm_start_runs_and_differs_from_cold() {
    let spec_cold = small_study(5);
    let (series, split, scaler) = spec_cold.materialize().unwrap();
    let cold = run_backtest(&spec_cold, &small_config(), &series, &split, &scaler).unwrap();
    let mut spec_warm = small_study(5);
    spec_warm.warm_start = true;
    let warm = run_backtest(&spec_warm, &small_config(), &series, &split, &scaler).unwrap();
    // first day matches (same init), later days generally diverge
    assert_eq!(cold.days[0].predicted, warm.days[0].predicted);
    assert!(
        cold.days[1..]
            .iter()
            .zip(&warm.days[1..])
            .any(|(a, b)| a.predicted != b.predicted),
        "warm start should change later retrains"
    );
}

#[test]
fn backtest_reproducible_under_same_spec() {
    let spec = small_study(6);
    let (series, split, scaler) = spec.materialize().unwrap();
    let a = run_backtest(&spec, &small_config(), &series, &split, &scaler).unwrap();
    let b = run_backtest(&spec, &small_config(), &series, &split, &scaler).unwrap();
    assert_eq!(a.smape, b.smape);
    for (x, y) in a.days.iter().zip(&b.days) {
        assert_eq!(x.predicted, y.predicted);
    }
}

#[test]
fn neighbour_features_help_on_coupled_data() {
    let spec = StudySpec::parse(
        "\
data = synth
synth.seed = 11
synth.n_days = 300
synth.coupling = 0.9
split.train_days = 210
split.val_days = 60
train.max_epochs = 60
train.patience = 10
train.seed = 3
",
    )
    .unwrap();
    let (_series, split, scaler) = spec.materialize().unwrap();
    let mut with_f = small_config();
    with_f.n1 = 16;
    let mut without_f = with_f;
    without_f.use_price_f = false;
    without_f.use_load_f = false;
    let s_with = validation_smape(&with_f, &split, &scaler, &spec.train).unwrap();
    let s_without = validation_smape(&without_f, &split, &scaler, &spec.train).unwrap();
    assert!(
        s_with < s_without,
        "with-F sMAPE {s_with} should beat without-F {s_without}"
    );
}

#[test]
fn compare_identical_results_is_degenerate() {
    let spec = small_study(7);
    let (series, split, scaler) = spec.materialize().unwrap();
    let result = run_backtest(&spec, &small_config(), &series, &split, &scaler).unwrap();
    let report = compare_models("a", &result.days, "b", &result.days, Side::TwoSided).unwrap();
    assert_eq!(report.smape_a, report.smape_b);
    assert!(report.degenerate_full);
    assert!(report.hourly.iter().all(|h| h.degenerate));
}

#[test]
fn compare_is_antisymmetric() {
    let spec = small_study(8);
    let (series, split, scaler) = spec.materialize().unwrap();
    let a = run_backtest(&spec, &small_config(), &series, &split, &scaler).unwrap();
    let mut other = small_config();
    other.n1 = 12;
    let b = run_backtest(&spec, &other, &series, &split, &scaler).unwrap();

    let ab = compare_models("a", &a.days, "b", &b.days, Side::OneSidedM1Better).unwrap();
    let ba = compare_models("b", &b.days, "a", &a.days, Side::OneSidedM1Better).unwrap();
    let (fa, fb) = (ab.full.unwrap(), ba.full.unwrap());
    assert_eq!(fa.statistic, -fb.statistic);
    assert!((fa.p_value + fb.p_value - 1.0).abs() < 1e-12);
    for (ra, rb) in ab.hourly.iter().zip(&ba.hourly) {
        assert_eq!(ra.statistic.unwrap(), -rb.statistic.unwrap());
    }
}

#[test]
fn compare_rejects_misaligned_days() {
    let spec = small_study(9);
    let (series, split, scaler) = spec.materialize().unwrap();
    let result = run_backtest(&spec, &small_config(), &series, &split, &scaler).unwrap();
    let shorter = &result.days[..result.days.len() - 1];
    assert!(matches!(
        compare_models("a", &result.days, "b", shorter, Side::TwoSided),
        Err(ExperimentError::Alignment(_))
    ));
}

#[test]
fn comparison_artifacts_have_documented_shapes() {
    let spec = small_study(10);
    let (series, split, scaler) = spec.materialize().unwrap();
    let a = run_backtest(&spec, &small_config(), &series, &split, &scaler).unwrap();
    let mut other = small_config();
    other.use_load_f = false;
    let b = run_backtest(&spec, &other, &series, &split, &scaler).unwrap();
    let report = compare_models("m1", &a.days, "m2", &b.days, Side::OneSidedM1Better).unwrap();

    let text = render_comparison(&report);
    assert!(text.contains("m1"));
    assert!(text.contains("m2"));
    assert!(text.contains("sMAPE"));
    assert!(text.contains("hour 24"));
    // p-values print in scientific notation
    assert!(text.contains("p-value") && text.contains("e-"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let plot = dir.path().join("hourly_dm_plotdata.csv");
    write_hourly_plotdata_csv(&report, &plot).unwrap();
    let contents = std::fs::read_to_string(&plot).unwrap();
    assert_eq!(contents.lines().count(), 25); // header + 24 rows
    assert!(contents.starts_with("hour,statistic,reference"));
    assert!(contents.contains("1.6448536269514722"));

    let dm = dir.path().join("dm.csv");
    write_dm_csv(&report, &dm).unwrap();
    let contents = std::fs::read_to_string(&dm).unwrap();
    assert_eq!(contents.lines().count(), 26); // header + full + 24 hours
}

#[test]
fn backtest_csv_round_trip() {
    let spec = small_study(12);
    let (series, split, scaler) = spec.materialize().unwrap();
    let result = run_backtest(&spec, &small_config(), &series, &split, &scaler).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("backtest.csv");
    write_backtest_csv(&result, &path).unwrap();
    let days = read_backtest_csv(&path).unwrap();
    assert_eq!(days.len(), result.days.len());
    for (a, b) in days.iter().zip(&result.days) {
        assert_eq!(a.date, b.date);
        assert_eq!(a.actual, b.actual);
        assert_eq!(a.predicted, b.predicted);
    }
}

#[test]
fn dual_study_scores_local_channel_and_improves_or_matches() {
    let spec = StudySpec::parse(
        "\
data = synth
synth.seed = 13
synth.n_days = 200
synth.coupling = 0.9
split.train_days = 150
split.val_days = 30
train.max_epochs = 30
train.patience = 6
train.seed = 2
",
    )
    .unwrap();
    let outcome = run_dual_study(&spec, &small_config()).unwrap();
    assert!(!outcome.single.dual);
    assert!(outcome.dual.dual);
    // dual predictions are sliced to the 24 local-market hours
    assert!(outcome.dual.days.iter().all(|d| d.predicted.len() == 24));
    assert_eq!(outcome.comparison.n_days, 20);
    assert!(outcome.audit_single.clean());
    assert!(outcome.audit_dual.clean());
}

#[test]
fn feature_selection_smoke_run_persists_trials_and_respects_frozen_domains() {
    let spec = StudySpec::parse(
        "\
data = synth
synth.seed = 14
synth.n_days = 130
synth.coupling = 0.9
split.train_days = 80
split.val_days = 30
space.theta_gB = 0
space.n1 = 8..12
space.n2 = 0
tpe.max_iterations = 5
tpe.seed = 5
train.max_epochs = 8
train.patience = 3
train.seed = 1
forest.min_leaf = 1
",
    )
    .unwrap();
    let mut streamed = 0;
    let outcome = run_feature_selection(&spec, |_| streamed += 1).unwrap();
    assert_eq!(outcome.history.len(), 5);
    assert_eq!(streamed, 5);
    assert!(outcome.history.trials().iter().all(|t| !t.config.use_gen_b));
    assert!(outcome
        .history
        .trials()
        .iter()
        .all(|t| t.performance.is_finite()));
    assert!(!outcome.report.main_effects.is_empty());
    // gen_B is frozen out of the space, so it cannot be selected
    assert!(!outcome.selection.is_selected(Coord::GenB));
}

#[test]
fn exit_codes_map_error_classes() {
    assert_eq!(ExperimentError::Spec("x".into()).exit_code(), 2);
    assert_eq!(ExperimentError::Alignment("x".into()).exit_code(), 3);
    assert_eq!(
        ExperimentError::Stats(crate::stats::StatsError::ZeroVariance).exit_code(),
        4
    );
    assert_eq!(
        ExperimentError::Fanova(crate::fanova::FanovaError::DegenerateHistory).exit_code(),
        4
    );
}
