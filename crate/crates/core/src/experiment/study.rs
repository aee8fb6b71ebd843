//! Study specifications: a flat `key = value` file describing data source,
//! split boundaries, search-space collapses, optimizer/training settings and
//! study outputs. Every key has a default; CLI flags can override any of
//! them with repeated `--set key=value` arguments.

use super::ExperimentError;
use crate::fanova::ForestSettings;
use crate::feature_space::{Coord, FeatureConfig, SearchSpace};
use crate::kv::KvBlock;
use crate::market_data::{
    fit_scaler, load_csv, repair_dst, split, synth_generate, CsvSchema, DatasetSplit, MarketSeries,
    ScalingParams,
};
use crate::neural_net::TrainSettings;
use crate::tpe::TpeSettings;
use chrono::NaiveDate;
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub enum DataSource {
    Csv {
        path: PathBuf,
    },
    Synth {
        seed: u64,
        n_days: usize,
        coupling: f64,
    },
}

#[derive(Debug, Clone, Copy)]
pub enum SplitSpec {
    /// explicit boundary dates: first validation day, first test day
    Dates(NaiveDate, NaiveDate),
    /// day counts from the series start
    Counts { train_days: usize, val_days: usize },
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub data: DataSource,
    pub split: SplitSpec,
    pub space: SearchSpace,
    pub tpe: TpeSettings,
    pub train: TrainSettings,
    pub forest: ForestSettings,
    /// selection threshold as a fraction of total variance
    pub epsilon: f64,
    /// dual-market (48-output) model variant for backtests
    pub dual: bool,
    /// retrain period in days during walk-forward evaluation
    pub cadence_days: usize,
    /// reuse the previous retrain's weights as initialization
    pub warm_start: bool,
    /// fold elapsed test days into the walk-forward training window
    pub fold_test_days: bool,
    pub output_dir: Option<PathBuf>,
    /// fixed configuration for backtest/dual studies
    pub config: Option<FeatureConfig>,
}

impl StudySpec {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let kv = KvBlock::parse(text).map_err(ExperimentError::Spec)?;
        Self::from_kv(&kv)
    }

    pub fn from_kv(kv: &KvBlock) -> Result<Self, ExperimentError> {
        let spec_err = |m: String| ExperimentError::Spec(m);

        let data = match kv.get("data").unwrap_or("synth") {
            "csv" => DataSource::Csv {
                path: PathBuf::from(kv.require("csv.path").map_err(spec_err)?.to_string()),
            },
            "synth" => DataSource::Synth {
                seed: kv.parse_as("synth.seed").map_err(spec_err)?.unwrap_or(0),
                n_days: kv
                    .parse_as("synth.n_days")
                    .map_err(spec_err)?
                    .unwrap_or(730),
                coupling: kv
                    .parse_as("synth.coupling")
                    .map_err(spec_err)?
                    .unwrap_or(0.9),
            },
            other => {
                return Err(ExperimentError::Spec(format!(
                    "unknown data source `{other}`"
                )))
            }
        };

        let split = match (kv.get("split.train_end"), kv.get("split.val_end")) {
            (Some(a), Some(b)) => SplitSpec::Dates(
                a.parse()
                    .map_err(|_| ExperimentError::Spec("bad split.train_end".into()))?,
                b.parse()
                    .map_err(|_| ExperimentError::Spec("bad split.val_end".into()))?,
            ),
            (None, None) => SplitSpec::Counts {
                train_days: kv
                    .parse_as("split.train_days")
                    .map_err(spec_err)?
                    .unwrap_or(365),
                val_days: kv
                    .parse_as("split.val_days")
                    .map_err(spec_err)?
                    .unwrap_or(120),
            },
            _ => {
                return Err(ExperimentError::Spec(
                    "split.train_end and split.val_end must be given together".into(),
                ))
            }
        };

        let mut space = SearchSpace::default();
        for coord in Coord::ALL {
            let key = format!("space.{}", coord.key());
            if let Some(raw) = kv.get(&key) {
                let domain =
                    parse_domain(raw).map_err(|e| ExperimentError::Spec(format!("{key}: {e}")))?;
                space
                    .set_domain(coord, domain)
                    .map_err(|e| ExperimentError::Spec(format!("{key}: {e}")))?;
            }
        }

        let tpe = TpeSettings {
            max_iterations: kv
                .parse_as("tpe.max_iterations")
                .map_err(spec_err)?
                .unwrap_or(1000),
            n_startup: kv
                .parse_as("tpe.n_startup")
                .map_err(spec_err)?
                .unwrap_or(20),
            gamma: kv.parse_as("tpe.gamma").map_err(spec_err)?.unwrap_or(0.25),
            n_candidates: kv
                .parse_as("tpe.n_candidates")
                .map_err(spec_err)?
                .unwrap_or(24),
            seed: kv.parse_as("tpe.seed").map_err(spec_err)?.unwrap_or(0),
        };
        let default_train = TrainSettings::default();
        let train = TrainSettings {
            learning_rate: kv
                .parse_as("train.learning_rate")
                .map_err(spec_err)?
                .unwrap_or(default_train.learning_rate),
            beta1: kv
                .parse_as("train.beta1")
                .map_err(spec_err)?
                .unwrap_or(default_train.beta1),
            beta2: kv
                .parse_as("train.beta2")
                .map_err(spec_err)?
                .unwrap_or(default_train.beta2),
            epsilon: kv
                .parse_as("train.epsilon")
                .map_err(spec_err)?
                .unwrap_or(default_train.epsilon),
            max_epochs: kv
                .parse_as("train.max_epochs")
                .map_err(spec_err)?
                .unwrap_or(default_train.max_epochs),
            patience: kv
                .parse_as("train.patience")
                .map_err(spec_err)?
                .unwrap_or(default_train.patience),
            batch_size: kv
                .parse_as("train.batch_size")
                .map_err(spec_err)?
                .unwrap_or(default_train.batch_size),
            seed: kv
                .parse_as("train.seed")
                .map_err(spec_err)?
                .unwrap_or(default_train.seed),
        };
        let default_forest = ForestSettings::default();
        let forest = ForestSettings {
            n_trees: kv
                .parse_as("forest.n_trees")
                .map_err(spec_err)?
                .unwrap_or(default_forest.n_trees),
            min_leaf: kv
                .parse_as("forest.min_leaf")
                .map_err(spec_err)?
                .unwrap_or(default_forest.min_leaf),
            bootstrap: kv
                .parse_as::<u8>("forest.bootstrap")
                .map_err(spec_err)?
                .map_or(default_forest.bootstrap, |v| v != 0),
            feature_subsample: kv.parse_as("forest.feature_subsample").map_err(spec_err)?,
            seed: kv
                .parse_as("forest.seed")
                .map_err(spec_err)?
                .unwrap_or(default_forest.seed),
        };

        let epsilon = kv.parse_as("epsilon").map_err(spec_err)?.unwrap_or(0.005);
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(ExperimentError::Spec(format!(
                "epsilon {epsilon} outside (0, 1]"
            )));
        }
        let dual = match kv.get("model").unwrap_or("single") {
            "single" => false,
            "dual" => true,
            other => return Err(ExperimentError::Spec(format!("unknown model `{other}`"))),
        };

        let config = {
            let keys_present: Vec<&Coord> = Coord::ALL
                .iter()
                .filter(|c| kv.get(&format!("config.{}", c.key())).is_some())
                .collect();
            if keys_present.is_empty() {
                None
            } else {
                let mut values = [0u32; crate::feature_space::N_COORDS];
                for (i, coord) in Coord::ALL.iter().enumerate() {
                    let key = format!("config.{}", coord.key());
                    values[i] = kv
                        .parse_as(&key)
                        .map_err(spec_err)?
                        .ok_or_else(|| ExperimentError::Spec(format!("missing {key}")))?;
                }
                Some(FeatureConfig::from_values(&values))
            }
        };

        Ok(Self {
            data,
            split,
            space,
            tpe,
            train,
            forest,
            epsilon,
            dual,
            cadence_days: kv
                .parse_as("backtest.cadence_days")
                .map_err(spec_err)?
                .unwrap_or(1),
            warm_start: kv
                .parse_as::<u8>("backtest.warm_start")
                .map_err(spec_err)?
                .is_some_and(|v| v != 0),
            fold_test_days: kv
                .parse_as::<u8>("backtest.fold_test_days")
                .map_err(spec_err)?
                .is_none_or(|v| v != 0),
            output_dir: kv.get("output_dir").map(PathBuf::from),
            config,
        })
    }

    /// Loads, repairs and splits the study data, and fits the scaler on the
    /// training slice.
    pub fn materialize(
        &self,
    ) -> Result<(MarketSeries, DatasetSplit, ScalingParams), ExperimentError> {
        let raw = match &self.data {
            DataSource::Csv { path } => load_csv(path, &CsvSchema::default())?,
            DataSource::Synth {
                seed,
                n_days,
                coupling,
            } => synth_generate(*seed, *n_days, *coupling),
        };
        let series = repair_dst(&raw)?;
        let (train_end, val_end) = match self.split {
            SplitSpec::Dates(a, b) => (a, b),
            SplitSpec::Counts {
                train_days,
                val_days,
            } => {
                let first = series
                    .first_date()
                    .ok_or_else(|| ExperimentError::Spec("empty series".into()))?;
                (
                    first + chrono::Duration::days(train_days as i64),
                    first + chrono::Duration::days((train_days + val_days) as i64),
                )
            }
        };
        let split = split(&series, train_end, val_end)?;
        let scaler = fit_scaler(&split.train)?;
        Ok((series, split, scaler))
    }
}

/// Domain syntax: comma-separated integers or inclusive `a..b` ranges,
/// e.g. `0,48..360`.
fn parse_domain(raw: &str) -> Result<Vec<u32>, String> {
    let mut out = Vec::new();
    for atom in raw.split(',') {
        let atom = atom.trim();
        if let Some((a, b)) = atom.split_once("..") {
            let a: u32 = a
                .trim()
                .parse()
                .map_err(|_| format!("bad range start `{a}`"))?;
            let b: u32 = b
                .trim()
                .parse()
                .map_err(|_| format!("bad range end `{b}`"))?;
            if a > b {
                return Err(format!("range {a}..{b} is empty"));
            }
            out.extend(a..=b);
        } else {
            out.push(atom.parse().map_err(|_| format!("bad value `{atom}`"))?);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
