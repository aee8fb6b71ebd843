//! Command-line interface: study-driven subcommands with flag overrides.
//!
//! Every study-based command reads a flat `key = value` spec file (see
//! `StudySpec`) and applies any `--set key=value` overrides on top. Exit
//! codes: 0 success, 2 spec error, 3 data error, 4 numeric degeneracy.

use crate::experiment::{
    audit_backtest, compare_models, read_backtest_csv, render_comparison, run_backtest,
    run_dual_study, run_feature_selection, write_backtest_csv, write_dm_csv,
    write_hourly_plotdata_csv, BacktestDay, ExperimentError, StudySpec,
};
use crate::fanova::{
    decompose, feature_marginals, fit_forest, render_importance, render_selection, select_features,
};
use crate::feature_space::FeatureConfig;
use crate::kv::KvBlock;
use crate::market_data::{load_csv, repair_dst, synth_generate, write_csv, CsvSchema};
use crate::neural_net::{save_model, SavedModel, MODEL_FORMAT_VERSION};
use crate::stats::{
    dm_test, loss_differential, read_error_series_csv, write_error_series_csv, Side,
};
use crate::tpe::{append_trial_log, read_trial_log};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "gridcast",
    about = "Day-ahead electricity price forecasting for coupled markets",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct StudyArgs {
    /// Study spec file (flat key = value lines)
    #[arg(long)]
    study: Option<PathBuf>,
    /// Override a study key, e.g. --set tpe.max_iterations=50 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides the study's output_dir)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load a two-market CSV, repair DST days and write the canonical form
    Ingest {
        /// Input CSV path
        #[arg(long)]
        input: PathBuf,
        /// Output path for the repaired canonical CSV
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate deterministic synthetic coupled-market data
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 730)]
        days: usize,
        #[arg(long, default_value_t = 0.9)]
        coupling: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Joint feature/hyperparameter search plus importance-based selection
    SelectFeatures(StudyArgs),
    /// Walk-forward backtest of a fixed configuration
    Backtest {
        #[command(flatten)]
        study: StudyArgs,
        /// Configuration file (flat key = value block); defaults to the
        /// study's config.* keys
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare two backtest CSVs with Diebold-Mariano tests
    Compare {
        /// Backtest CSV of the candidate model
        #[arg(long)]
        a: PathBuf,
        /// Backtest CSV of the baseline model
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "one")]
        side: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Train and compare single- and dual-market variants of one config
    DualStudy {
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Diebold-Mariano test on an error-series CSV (date,hour,error_m1,error_m2)
    DmTest {
        #[arg(long)]
        errors: PathBuf,
        /// Serial-correlation order (23 = full-sequence convention)
        #[arg(long, default_value_t = 23)]
        order: usize,
        #[arg(long, default_value = "one")]
        side: String,
    },
    /// Recompute importance and selection reports from a trial log
    Report {
        #[command(flatten)]
        study: StudyArgs,
        /// Trial log (newline-delimited JSON)
        #[arg(long)]
        trials: PathBuf,
    },
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::Ingest { input, output } => {
            let raw = load_csv(&input, &CsvSchema::default())?;
            let repaired = repair_dst(&raw)?;
            repaired.validate_hourly()?;
            write_csv(&repaired, &output)?;
            println!(
                "ingested {} rows -> {} repaired days ({} .. {})",
                raw.len(),
                repaired.n_days(),
                repaired.first_date().unwrap(),
                repaired.last_date().unwrap()
            );
            Ok(())
        }
        Command::Synth {
            seed,
            days,
            coupling,
            output,
        } => {
            if days < 60 {
                return Err(ExperimentError::Spec("synth needs at least 60 days".into()));
            }
            if !(0.0..=1.0).contains(&coupling) {
                return Err(ExperimentError::Spec("coupling must lie in [0, 1]".into()));
            }
            let series = synth_generate(seed, days, coupling);
            write_csv(&series, &output)?;
            println!("wrote {} hourly rows to {}", series.len(), output.display());
            Ok(())
        }
        Command::SelectFeatures(args) => select_features_cmd(&args),
        Command::Backtest { study, config } => backtest_cmd(&study, config.as_deref()),
        Command::Compare { a, b, side, out } => compare_cmd(&a, &b, &side, &out),
        Command::DualStudy { study, config } => dual_study_cmd(&study, config.as_deref()),
        Command::DmTest {
            errors,
            order,
            side,
        } => dm_test_cmd(&errors, order, &side),
        Command::Report { study, trials } => report_cmd(&study, &trials),
    }
}

fn load_study(args: &StudyArgs) -> Result<(StudySpec, PathBuf), ExperimentError> {
    let mut kv = match &args.study {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            KvBlock::parse(&text).map_err(ExperimentError::Spec)?
        }
        None => KvBlock::new(),
    };
    for raw in &args.overrides {
        let (key, value) = raw
            .split_once('=')
            .ok_or_else(|| ExperimentError::Spec(format!("--set needs KEY=VALUE, got `{raw}`")))?;
        kv.set(key.trim(), value.trim());
    }
    let spec = StudySpec::from_kv(&kv)?;
    let out = args
        .out
        .clone()
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out)?;
    Ok((spec, out))
}

fn load_config(spec: &StudySpec, path: Option<&Path>) -> Result<FeatureConfig, ExperimentError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            FeatureConfig::from_kv_block(&text).map_err(ExperimentError::Feature)
        }
        None => spec.config.ok_or_else(|| {
            ExperimentError::Spec("no --config file and no config.* keys in the study".into())
        }),
    }
}

fn parse_side(raw: &str) -> Result<Side, ExperimentError> {
    match raw {
        "one" | "one-sided" => Ok(Side::OneSidedM1Better),
        "two" | "two-sided" => Ok(Side::TwoSided),
        other => Err(ExperimentError::Spec(format!("unknown side `{other}`"))),
    }
}

fn write_selection_artifacts(
    out: &Path,
    outcome: &crate::experiment::SelectionOutcome,
) -> Result<(), ExperimentError> {
    fs::write(
        out.join("importance.txt"),
        render_importance(&outcome.report),
    )?;
    fs::write(
        out.join("importance.json"),
        serde_json::to_string_pretty(&outcome.report).expect("report serializes"),
    )?;
    fs::write(
        out.join("selection.txt"),
        render_selection(&outcome.selection),
    )?;
    fs::write(
        out.join("selection.json"),
        serde_json::to_string_pretty(&outcome.selection).expect("selection serializes"),
    )?;
    Ok(())
}

fn select_features_cmd(args: &StudyArgs) -> Result<(), ExperimentError> {
    let (spec, out) = load_study(args)?;
    let mut log = fs::File::create(out.join("trials.ndjson"))?;
    let outcome = run_feature_selection(&spec, |trial| {
        append_trial_log(trial, &mut log).expect("trial log write");
        println!(
            "trial {:>4}: validation sMAPE {:>8.3}%",
            trial.iteration, trial.performance
        );
    })?;
    fs::write(
        out.join("best_config.txt"),
        outcome.best_config.to_kv_block(),
    )?;
    write_selection_artifacts(&out, &outcome)?;
    println!(
        "best validation sMAPE {:.3}% after {} trials",
        outcome
            .history
            .best()
            .map(|t| t.performance)
            .unwrap_or(f64::NAN),
        outcome.history.len()
    );
    println!("{}", render_selection(&outcome.selection));
    Ok(())
}

fn backtest_cmd(args: &StudyArgs, config_path: Option<&Path>) -> Result<(), ExperimentError> {
    let (spec, out) = load_study(args)?;
    let config = load_config(&spec, config_path)?;
    let (series, split, scaler) = spec.materialize()?;
    let result = run_backtest(&spec, &config, &series, &split, &scaler)?;
    write_backtest_csv(&result, out.join("backtest.csv"))?;
    let audit = audit_backtest(&result);

    // also persist a deployable model trained on the study's train slice
    // with early stopping on the validation slice
    let train_samples =
        crate::feature_space::build_samples(&config, &split.train, &scaler, spec.dual)?;
    let val_samples =
        crate::feature_space::build_samples(&config, &split.validation, &scaler, spec.dual)?;
    let shape = crate::neural_net::NetworkShape::new(
        crate::feature_space::input_dimension(&config)?,
        config.n1 as usize,
        config.n2 as usize,
        if spec.dual { 48 } else { 24 },
    )?;
    let (weights, _) = crate::neural_net::train(&train_samples, &val_samples, shape, &spec.train)?;
    let model = SavedModel {
        version: MODEL_FORMAT_VERSION,
        config,
        dual: spec.dual,
        scaler: scaler.clone(),
        weights,
    };
    save_model(&model, out.join("model.json"))
        .map_err(|e| ExperimentError::Data2(e.to_string()))?;

    println!(
        "backtest: {} days, sMAPE {:.3}% -> {}",
        result.days.len(),
        result.smape,
        out.join("backtest.csv").display()
    );
    if !audit.clean() {
        for v in &audit.violations {
            eprintln!("leakage: {v}");
        }
        return Err(ExperimentError::Spec("leakage audit failed".into()));
    }
    println!("leakage audit: {} days clean", audit.checked_days);
    Ok(())
}

fn compare_cmd(a: &Path, b: &Path, side: &str, out: &Path) -> Result<(), ExperimentError> {
    let side = parse_side(side)?;
    let days_a = read_backtest_csv(a)?;
    let days_b = read_backtest_csv(b)?;
    fs::create_dir_all(out)?;
    let report = compare_models("model-a", &days_a, "model-b", &days_b, side)?;
    write_comparison_artifacts(out, &report, &days_a, &days_b)?;
    println!("{}", render_comparison(&report));
    Ok(())
}

fn write_comparison_artifacts(
    out: &Path,
    report: &crate::experiment::ComparisonReport,
    days_a: &[BacktestDay],
    days_b: &[BacktestDay],
) -> Result<(), ExperimentError> {
    fs::write(out.join("comparison.txt"), render_comparison(report))?;
    fs::write(
        out.join("comparison.json"),
        serde_json::to_string_pretty(report).expect("report serializes"),
    )?;
    write_dm_csv(report, out.join("dm.csv"))?;
    write_hourly_plotdata_csv(report, out.join("hourly_dm_plotdata.csv"))?;
    let errors = |days: &[BacktestDay]| {
        crate::stats::ErrorSeries::from_days(
            days.iter()
                .map(|d| {
                    let mut e = [0.0; 24];
                    for h in 0..24 {
                        e[h] = d.actual[h] - d.predicted[h];
                    }
                    (d.date, e)
                })
                .collect(),
        )
    };
    write_error_series_csv(&errors(days_a), &errors(days_b), out.join("errors.csv"))?;
    Ok(())
}

fn dual_study_cmd(args: &StudyArgs, config_path: Option<&Path>) -> Result<(), ExperimentError> {
    let (spec, out) = load_study(args)?;
    let config = load_config(&spec, config_path)?;
    let outcome = run_dual_study(&spec, &config)?;
    write_backtest_csv(&outcome.single, out.join("backtest_single.csv"))?;
    write_backtest_csv(&outcome.dual, out.join("backtest_dual.csv"))?;
    write_comparison_artifacts(
        &out,
        &outcome.comparison,
        &outcome.dual.days,
        &outcome.single.days,
    )?;
    if !(outcome.audit_single.clean() && outcome.audit_dual.clean()) {
        return Err(ExperimentError::Spec("leakage audit failed".into()));
    }
    println!("{}", render_comparison(&outcome.comparison));
    Ok(())
}

fn dm_test_cmd(errors: &Path, order: usize, side: &str) -> Result<(), ExperimentError> {
    let side = parse_side(side)?;
    let (e1, e2) = read_error_series_csv(errors)?;
    let d = loss_differential(&e1, &e2, 1)?;
    let result = dm_test(&d, order, side)?;
    println!(
        "DM statistic {:.4}, p-value {:.3e} (order {}, n {}{})",
        result.statistic,
        result.p_value,
        result.serial_correlation_order,
        result.n_obs,
        if result.bartlett_fallback {
            ", Bartlett fallback"
        } else {
            ""
        }
    );
    Ok(())
}

fn report_cmd(args: &StudyArgs, trials: &Path) -> Result<(), ExperimentError> {
    let (spec, out) = load_study(args)?;
    let history = read_trial_log(trials, &spec.space)?;
    let forest = fit_forest(&history, &spec.forest)?;
    let report = decompose(&forest)?;
    let marginals = feature_marginals(&forest)?;
    let selection = select_features(&report, &marginals, spec.epsilon)?;
    fs::write(out.join("importance.txt"), render_importance(&report))?;
    fs::write(
        out.join("importance.json"),
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    fs::write(out.join("selection.txt"), render_selection(&selection))?;
    fs::write(
        out.join("selection.json"),
        serde_json::to_string_pretty(&selection).expect("selection serializes"),
    )?;
    println!("{}", render_importance(&report));
    println!("{}", render_selection(&selection));
    Ok(())
}
