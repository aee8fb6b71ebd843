//! Sequential model-based search over the feature/hyperparameter space with
//! a tree-structured Parzen estimator.
//!
//! Every coordinate here is discrete, so both densities are categorical
//! Parzen estimators with add-one smoothing: after the random startup phase
//! the trial history is split at the `gamma` performance quantile, per
//! coordinate a "good" density `l` and a "bad" density `g` are tallied,
//! `n_candidates` configurations are drawn from `l` and the candidate with
//! the largest `prod l/g` is evaluated next.

use crate::feature_space::{sample_config, Coord, FeatureConfig, SearchSpace};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TpeError {
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("trial log corrupt: {0}")]
    CorruptLog(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One evaluated configuration. `performance` is the validation sMAPE in
/// percent; failed evaluations carry `+inf`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trial {
    pub iteration: usize,
    pub config: FeatureConfig,
    pub performance: f64,
    pub duration_secs: f64,
}

/// Ordered trial record plus the space it was drawn from.
#[derive(Debug, Clone)]
pub struct TrialHistory {
    space: SearchSpace,
    trials: Vec<Trial>,
}

impl TrialHistory {
    pub fn new(space: SearchSpace) -> Self {
        Self {
            space,
            trials: Vec::new(),
        }
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Appends a result; iteration indices stay dense 1..=len.
    pub fn push(&mut self, config: FeatureConfig, performance: f64, duration_secs: f64) -> &Trial {
        let performance = if performance.is_nan() {
            f64::INFINITY
        } else {
            performance
        };
        self.trials.push(Trial {
            iteration: self.trials.len() + 1,
            config,
            performance,
            duration_secs,
        });
        self.trials.last().unwrap()
    }

    /// Best trial: minimal performance, earliest on ties.
    pub fn best(&self) -> Option<&Trial> {
        self.trials
            .iter()
            .min_by(|a, b| a.performance.partial_cmp(&b.performance).unwrap())
    }
}

/// Search budget and estimator settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TpeSettings {
    /// Total objective evaluations T.
    pub max_iterations: usize,
    /// Uniform random draws before the Parzen model kicks in.
    pub n_startup: usize,
    /// Good/bad split quantile.
    pub gamma: f64,
    /// Candidate draws per iteration.
    pub n_candidates: usize,
    pub seed: u64,
}

impl Default for TpeSettings {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            n_startup: 20,
            gamma: 0.25,
            n_candidates: 24,
            seed: 0,
        }
    }
}

impl TpeSettings {
    pub fn validate(&self) -> Result<(), TpeError> {
        if self.max_iterations < 1 {
            return Err(TpeError::InvalidSettings(
                "max_iterations must be >= 1".into(),
            ));
        }
        if self.n_startup < 1 {
            return Err(TpeError::InvalidSettings("n_startup must be >= 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(TpeError::InvalidSettings("gamma must lie in (0, 1)".into()));
        }
        if self.n_candidates < 1 {
            return Err(TpeError::InvalidSettings(
                "n_candidates must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-coordinate categorical density with add-one smoothing.
struct Parzen {
    /// probability per domain value, aligned with the coordinate's domain
    probs: Vec<f64>,
}

impl Parzen {
    fn tally(domain: &[u32], values: impl Iterator<Item = u32>) -> Self {
        let mut counts = vec![1.0_f64; domain.len()];
        let mut total = domain.len() as f64;
        for v in values {
            if let Some(pos) = domain.iter().position(|d| *d == v) {
                counts[pos] += 1.0;
                total += 1.0;
            }
        }
        for c in counts.iter_mut() {
            *c /= total;
        }
        Self { probs: counts }
    }

    fn sample(&self, domain: &[u32], rng: &mut ChaCha8Rng) -> u32 {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let mut acc = 0.0;
        for (p, v) in self.probs.iter().zip(domain) {
            acc += p;
            if u < acc {
                return *v;
            }
        }
        *domain.last().unwrap()
    }

    fn log_prob(&self, domain: &[u32], value: u32) -> f64 {
        let pos = domain.iter().position(|d| *d == value).unwrap();
        self.probs[pos].ln()
    }
}

/// Proposes the next configuration to evaluate.
///
/// Fewer than `n_startup` trials: a uniform draw over the space. Otherwise
/// the history splits at the `gamma` quantile (lower sMAPE = good side),
/// candidates are drawn from the good density and the best `l/g` ratio wins.
pub fn suggest(
    history: &TrialHistory,
    settings: &TpeSettings,
    rng: &mut ChaCha8Rng,
) -> FeatureConfig {
    let space = &history.space;
    if history.len() < settings.n_startup {
        return sample_config(space, rng);
    }

    let n = history.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        history.trials[a]
            .performance
            .partial_cmp(&history.trials[b].performance)
            .unwrap()
            .then(a.cmp(&b))
    });
    let n_good = ((settings.gamma * n as f64).ceil() as usize).clamp(1, n - 1);
    let (good_idx, bad_idx) = order.split_at(n_good);

    let densities: Vec<(Parzen, Parzen)> = Coord::ALL
        .iter()
        .map(|c| {
            let domain = space.domain(*c);
            let good = Parzen::tally(
                domain,
                good_idx.iter().map(|&i| history.trials[i].config.value(*c)),
            );
            let bad = Parzen::tally(
                domain,
                bad_idx.iter().map(|&i| history.trials[i].config.value(*c)),
            );
            (good, bad)
        })
        .collect();

    let mut best: Option<(f64, FeatureConfig)> = None;
    for _ in 0..settings.n_candidates {
        let mut values = [0u32; crate::feature_space::N_COORDS];
        let mut score = 0.0;
        for (i, c) in Coord::ALL.iter().enumerate() {
            let domain = space.domain(*c);
            let (good, bad) = &densities[i];
            let v = good.sample(domain, rng);
            score += good.log_prob(domain, v) - bad.log_prob(domain, v);
            values[i] = v;
        }
        let config = FeatureConfig::from_values(&values);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, config));
        }
    }
    best.unwrap().1
}

/// Runs the full sequential search: exactly `max_iterations` objective
/// evaluations, returning the best configuration and the complete history.
/// Non-finite objective values are recorded as `+inf` and never abort the
/// search. `on_trial` fires after every evaluation (trial-log streaming).
pub fn optimize_with<F, C>(
    mut history: TrialHistory,
    mut objective: F,
    settings: &TpeSettings,
    mut on_trial: C,
) -> Result<(FeatureConfig, TrialHistory), TpeError>
where
    F: FnMut(&FeatureConfig) -> f64,
    C: FnMut(&Trial),
{
    settings.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    while history.len() < settings.max_iterations {
        let config = suggest(&history, settings, &mut rng);
        let started = std::time::Instant::now();
        let raw = objective(&config);
        let performance = if raw.is_finite() { raw } else { f64::INFINITY };
        let trial = history.push(config, performance, started.elapsed().as_secs_f64());
        on_trial(trial);
    }
    let best = history
        .best()
        .expect("at least one trial was evaluated")
        .config;
    Ok((best, history))
}

/// [`optimize_with`] from an empty history without a trial sink.
pub fn optimize<F>(
    objective: F,
    space: &SearchSpace,
    settings: &TpeSettings,
) -> Result<(FeatureConfig, TrialHistory), TpeError>
where
    F: FnMut(&FeatureConfig) -> f64,
{
    optimize_with(
        TrialHistory::new(space.clone()),
        objective,
        settings,
        |_| {},
    )
}

/// Appends one trial to a newline-delimited JSON log.
pub fn append_trial_log(trial: &Trial, file: &mut File) -> Result<(), TpeError> {
    let line = serde_json::to_string(trial).map_err(|e| TpeError::CorruptLog(e.to_string()))?;
    writeln!(file, "{line}")?;
    Ok(())
}

/// Writes a whole history as a newline-delimited JSON trial log.
pub fn write_trial_log(history: &TrialHistory, path: impl AsRef<Path>) -> Result<(), TpeError> {
    let mut file = File::create(path)?;
    for trial in history.trials() {
        append_trial_log(trial, &mut file)?;
    }
    Ok(())
}

/// Reads a trial log back (for resume or post-hoc importance analysis).
/// Iteration indices must be dense 1..=T and configs must lie in `space`.
pub fn read_trial_log(
    path: impl AsRef<Path>,
    space: &SearchSpace,
) -> Result<TrialHistory, TpeError> {
    let reader = BufReader::new(File::open(path)?);
    let mut history = TrialHistory::new(space.clone());
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let trial: Trial = serde_json::from_str(&line)
            .map_err(|e| TpeError::CorruptLog(format!("line {}: {e}", idx + 1)))?;
        if trial.iteration != history.len() + 1 {
            return Err(TpeError::CorruptLog(format!(
                "line {}: iteration {} out of order",
                idx + 1,
                trial.iteration
            )));
        }
        if !space.contains(&trial.config) {
            return Err(TpeError::CorruptLog(format!(
                "line {}: config outside the search space",
                idx + 1
            )));
        }
        history.push(trial.config, trial.performance, trial.duration_secs);
    }
    Ok(history)
}
