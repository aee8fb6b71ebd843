//! Joint feature/hyperparameter search space and sample construction.
//!
//! A configuration selects which inputs a forecaster sees: how many days of
//! hourly local-market price lags, how many weekly-lag days, whether the
//! neighbour-market prices mirror those lags, which day-ahead load/generation
//! curves enter, whether holiday flags enter, and the two hidden-layer
//! widths. Input columns follow a fixed, documented ordering so weight files
//! stay portable:
//!
//! 1. B daily price lags, most recent hour first (`24 * past_days` columns)
//! 2. B weekly-lag days, week 1 first, each day chronological (`24 * weekly_lags`)
//! 3. F daily price lags, same lag indices as B (if enabled)
//! 4. F weekly-lag days (if enabled)
//! 5. load_B, load_F, gen_B, gen_F day-ahead curves for the target day,
//!    24 columns each (those enabled)
//! 6. holiday_B, holiday_F scalar flags for the target day (those enabled)

use crate::kv::KvBlock;
use crate::linalg::Matrix;
use crate::market_data::{Channel, MarketSeries, ScalingParams};
use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureSpaceError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "slice of {got} day(s) too short: first usable target day needs {needed} prior day(s)"
    )]
    SliceTooShort { needed: usize, got: usize },
}

/// Coordinates of the search space, in serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coord {
    PastDays,
    WeeklyLags,
    PriceF,
    LoadB,
    LoadF,
    GenB,
    GenF,
    HolidayB,
    HolidayF,
    N1,
    N2,
}

pub const N_COORDS: usize = 11;

impl Coord {
    pub const ALL: [Coord; N_COORDS] = [
        Coord::PastDays,
        Coord::WeeklyLags,
        Coord::PriceF,
        Coord::LoadB,
        Coord::LoadF,
        Coord::GenB,
        Coord::GenF,
        Coord::HolidayB,
        Coord::HolidayF,
        Coord::N1,
        Coord::N2,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap()
    }

    /// Key used in config blocks, trial logs and reports.
    pub fn key(self) -> &'static str {
        match self {
            Coord::PastDays => "theta_pBd",
            Coord::WeeklyLags => "theta_pBw",
            Coord::PriceF => "theta_pF",
            Coord::LoadB => "theta_lB",
            Coord::LoadF => "theta_lF",
            Coord::GenB => "theta_gB",
            Coord::GenF => "theta_gF",
            Coord::HolidayB => "theta_HB",
            Coord::HolidayF => "theta_HF",
            Coord::N1 => "n1",
            Coord::N2 => "n2",
        }
    }

    /// Human-readable label for report tables.
    pub fn label(self) -> &'static str {
        match self {
            Coord::PastDays => "Past days number",
            Coord::WeeklyLags => "Weekly lags number",
            Coord::PriceF => "F prices",
            Coord::LoadB => "B load",
            Coord::LoadF => "F load",
            Coord::GenB => "B generation",
            Coord::GenF => "F generation",
            Coord::HolidayB => "B holidays",
            Coord::HolidayF => "F holidays",
            Coord::N1 => "1st hidden layer width",
            Coord::N2 => "2nd hidden layer width",
        }
    }

    /// Binary inclusion features: value 0 excludes the input entirely.
    pub fn is_binary_feature(self) -> bool {
        matches!(
            self,
            Coord::PriceF
                | Coord::LoadB
                | Coord::LoadF
                | Coord::GenB
                | Coord::GenF
                | Coord::HolidayB
                | Coord::HolidayF
        )
    }

    /// Integer features whose domain has no exclusion value.
    pub fn is_integer_feature(self) -> bool {
        matches!(self, Coord::PastDays | Coord::WeeklyLags)
    }
}

/// One point in the joint feature/hyperparameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Days of hourly B-price lags, 1..=6.
    pub past_days: u32,
    /// Weekly-lag days (exact multiples of 168 hours back), 1..=3.
    pub weekly_lags: u32,
    pub use_price_f: bool,
    pub use_load_b: bool,
    pub use_load_f: bool,
    pub use_gen_b: bool,
    pub use_gen_f: bool,
    pub use_holiday_b: bool,
    pub use_holiday_f: bool,
    /// First hidden layer width.
    pub n1: u32,
    /// Second hidden layer width; 0 removes the layer.
    pub n2: u32,
}

impl FeatureConfig {
    pub fn value(&self, coord: Coord) -> u32 {
        match coord {
            Coord::PastDays => self.past_days,
            Coord::WeeklyLags => self.weekly_lags,
            Coord::PriceF => self.use_price_f as u32,
            Coord::LoadB => self.use_load_b as u32,
            Coord::LoadF => self.use_load_f as u32,
            Coord::GenB => self.use_gen_b as u32,
            Coord::GenF => self.use_gen_f as u32,
            Coord::HolidayB => self.use_holiday_b as u32,
            Coord::HolidayF => self.use_holiday_f as u32,
            Coord::N1 => self.n1,
            Coord::N2 => self.n2,
        }
    }

    pub fn values(&self) -> [u32; N_COORDS] {
        let mut out = [0; N_COORDS];
        for (i, c) in Coord::ALL.iter().enumerate() {
            out[i] = self.value(*c);
        }
        out
    }

    pub fn from_values(values: &[u32; N_COORDS]) -> Self {
        Self {
            past_days: values[0],
            weekly_lags: values[1],
            use_price_f: values[2] != 0,
            use_load_b: values[3] != 0,
            use_load_f: values[4] != 0,
            use_gen_b: values[5] != 0,
            use_gen_f: values[6] != 0,
            use_holiday_b: values[7] != 0,
            use_holiday_f: values[8] != 0,
            n1: values[9],
            n2: values[10],
        }
    }

    /// Serializes to the flat `key = value` interchange block.
    pub fn to_kv_block(&self) -> String {
        let mut kv = KvBlock::new();
        for c in Coord::ALL {
            kv.set(c.key(), self.value(c));
        }
        kv.render()
    }

    pub fn from_kv_block(text: &str) -> Result<Self, FeatureSpaceError> {
        let kv = KvBlock::parse(text).map_err(FeatureSpaceError::InvalidConfig)?;
        let mut values = [0u32; N_COORDS];
        for (i, c) in Coord::ALL.iter().enumerate() {
            let raw = kv
                .require(c.key())
                .map_err(FeatureSpaceError::InvalidConfig)?;
            values[i] = raw.parse().map_err(|_| {
                FeatureSpaceError::InvalidConfig(format!("bad value for {}", c.key()))
            })?;
        }
        Ok(Self::from_values(&values))
    }

    fn check_structural(&self) -> Result<(), FeatureSpaceError> {
        if !(1..=6).contains(&self.past_days) {
            return Err(FeatureSpaceError::InvalidConfig(format!(
                "past_days {} outside 1..=6",
                self.past_days
            )));
        }
        if !(1..=3).contains(&self.weekly_lags) {
            return Err(FeatureSpaceError::InvalidConfig(format!(
                "weekly_lags {} outside 1..=3",
                self.weekly_lags
            )));
        }
        Ok(())
    }
}

/// Per-coordinate value domains. Defaults follow the full search space; a
/// study may collapse a coordinate (e.g. freeze a feature to 0) or replace a
/// hyperparameter range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSpace {
    domains: [Vec<u32>; N_COORDS],
}

impl Default for SearchSpace {
    fn default() -> Self {
        let mut n2: Vec<u32> = vec![0];
        n2.extend(48..=360);
        Self {
            domains: [
                (1..=6).collect(),
                (1..=3).collect(),
                vec![0, 1],
                vec![0, 1],
                vec![0, 1],
                vec![0, 1],
                vec![0, 1],
                vec![0, 1],
                vec![0, 1],
                (100..=400).collect(),
                n2,
            ],
        }
    }
}

impl SearchSpace {
    pub fn domain(&self, coord: Coord) -> &[u32] {
        &self.domains[coord.index()]
    }

    /// Replaces a coordinate's domain. Values must be sorted, distinct and
    /// structurally valid for the coordinate.
    pub fn set_domain(&mut self, coord: Coord, values: Vec<u32>) -> Result<(), FeatureSpaceError> {
        if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FeatureSpaceError::InvalidConfig(format!(
                "domain for {} must be nonempty, sorted, distinct",
                coord.key()
            )));
        }
        let ok = match coord {
            Coord::PastDays => values.iter().all(|v| (1..=6).contains(v)),
            Coord::WeeklyLags => values.iter().all(|v| (1..=3).contains(v)),
            c if c.is_binary_feature() => values.iter().all(|v| *v <= 1),
            Coord::N1 => values.iter().all(|v| *v >= 1),
            _ => true,
        };
        if !ok {
            return Err(FeatureSpaceError::InvalidConfig(format!(
                "domain values out of range for {}",
                coord.key()
            )));
        }
        self.domains[coord.index()] = values;
        Ok(())
    }

    /// Freezes a binary feature out of the space.
    pub fn freeze_off(&mut self, coord: Coord) -> Result<(), FeatureSpaceError> {
        self.set_domain(coord, vec![0])
    }

    pub fn contains(&self, config: &FeatureConfig) -> bool {
        Coord::ALL
            .iter()
            .all(|c| self.domain(*c).contains(&config.value(*c)))
    }

    pub fn validate(&self, config: &FeatureConfig) -> Result<(), FeatureSpaceError> {
        config.check_structural()?;
        for c in Coord::ALL {
            if !self.domain(c).contains(&config.value(c)) {
                return Err(FeatureSpaceError::InvalidConfig(format!(
                    "{} = {} outside its domain",
                    c.key(),
                    config.value(c)
                )));
            }
        }
        Ok(())
    }

    /// Total number of configurations (may overflow for the full space; used
    /// on small spaces only).
    pub fn cardinality(&self) -> u128 {
        self.domains.iter().map(|d| d.len() as u128).product()
    }
}

/// Uniform draw over every coordinate's domain. Deterministic under a seeded
/// generator.
pub fn sample_config<R: Rng>(space: &SearchSpace, rng: &mut R) -> FeatureConfig {
    let mut values = [0u32; N_COORDS];
    for (i, c) in Coord::ALL.iter().enumerate() {
        let domain = space.domain(*c);
        values[i] = domain[rng.gen_range(0..domain.len())];
    }
    FeatureConfig::from_values(&values)
}

/// Input blocks in column order, used for layout bookkeeping and audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputBlock {
    PriceBDaily,
    PriceBWeekly,
    PriceFDaily,
    PriceFWeekly,
    LoadB,
    LoadF,
    GenB,
    GenF,
    HolidayB,
    HolidayF,
}

/// Column layout of a configuration: block identities and widths in order.
pub fn block_layout(config: &FeatureConfig) -> Vec<(InputBlock, usize)> {
    let mut out = Vec::new();
    out.push((InputBlock::PriceBDaily, 24 * config.past_days as usize));
    out.push((InputBlock::PriceBWeekly, 24 * config.weekly_lags as usize));
    if config.use_price_f {
        out.push((InputBlock::PriceFDaily, 24 * config.past_days as usize));
        out.push((InputBlock::PriceFWeekly, 24 * config.weekly_lags as usize));
    }
    for (flag, block) in [
        (config.use_load_b, InputBlock::LoadB),
        (config.use_load_f, InputBlock::LoadF),
        (config.use_gen_b, InputBlock::GenB),
        (config.use_gen_f, InputBlock::GenF),
    ] {
        if flag {
            out.push((block, 24));
        }
    }
    if config.use_holiday_b {
        out.push((InputBlock::HolidayB, 1));
    }
    if config.use_holiday_f {
        out.push((InputBlock::HolidayF, 1));
    }
    out
}

/// Number of network inputs a configuration produces.
pub fn input_dimension(config: &FeatureConfig) -> Result<usize, FeatureSpaceError> {
    config.check_structural()?;
    Ok(block_layout(config).iter().map(|(_, w)| w).sum())
}

/// Price-lag offsets (hours before the end of day `d-1`, offset 0 = the final
/// pre-target hour) implied by a configuration. All offsets are nonnegative,
/// which is exactly the no-leakage property for price inputs.
pub fn price_lag_offsets(config: &FeatureConfig) -> Vec<usize> {
    let mut offsets: Vec<usize> = (0..24 * config.past_days as usize).collect();
    for k in 1..=config.weekly_lags as usize {
        // day exactly k weeks before the target day, chronological order
        for j in 0..24 {
            offsets.push(168 * k - 24 + (23 - j));
        }
    }
    offsets
}

/// Supervised samples for one contiguous slice: `inputs` is N x n (scaled),
/// `targets` N x 24 (or N x 48 when `dual`, B hours then F hours), rows
/// aligned with `origin_days`.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub inputs: Matrix,
    pub targets: Matrix,
    pub origin_days: Vec<NaiveDate>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.origin_days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origin_days.is_empty()
    }
}

/// Materializes supervised samples for every eligible target day of a slice.
///
/// For target day `d` the forecast origin is the end of day `d-1`: price lags
/// count back from that hour, while load/generation/holiday inputs describe
/// day `d` itself (published before the bid deadline). The first eligible
/// target day is `7 * weekly_lags` days after the slice start.
pub fn build_samples(
    config: &FeatureConfig,
    slice: &MarketSeries,
    scaler: &ScalingParams,
    dual: bool,
) -> Result<SampleSet, FeatureSpaceError> {
    build_samples_from(config, slice, scaler, dual, None)
}

/// As [`build_samples`] but restricted to target days at or after
/// `first_day` (used by the walk-forward loop to build one day at a time).
pub fn build_samples_from(
    config: &FeatureConfig,
    slice: &MarketSeries,
    scaler: &ScalingParams,
    dual: bool,
    first_day: Option<NaiveDate>,
) -> Result<SampleSet, FeatureSpaceError> {
    config.check_structural()?;
    let n = input_dimension(config)?;
    let records = slice.records();
    let n_days = records.len() / 24;
    let lag_days = 7 * config.weekly_lags as usize;
    if n_days <= lag_days || !records.len().is_multiple_of(24) {
        return Err(FeatureSpaceError::SliceTooShort {
            needed: lag_days,
            got: n_days,
        });
    }

    let m = if dual { 48 } else { 24 };
    let mut rows: Vec<f64> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    let mut origin_days = Vec::new();

    for day in lag_days..n_days {
        let day_start = day * 24;
        let date = records[day_start].date();
        if let Some(first) = first_day {
            if date < first {
                continue;
            }
        }
        // deadline index: last hour of day d-1
        let deadline = day_start - 1;

        // B daily lags, most recent first
        for i in 0..24 * config.past_days as usize {
            rows.push(scaler.apply(Channel::PriceB, records[deadline - i].price_b));
        }
        // B weekly-lag days, chronological within each day
        for k in 1..=config.weekly_lags as usize {
            let lag_day_start = day_start - 168 * k;
            for j in 0..24 {
                rows.push(scaler.apply(Channel::PriceB, records[lag_day_start + j].price_b));
            }
        }
        if config.use_price_f {
            for i in 0..24 * config.past_days as usize {
                rows.push(scaler.apply(Channel::PriceF, records[deadline - i].price_f));
            }
            for k in 1..=config.weekly_lags as usize {
                let lag_day_start = day_start - 168 * k;
                for j in 0..24 {
                    rows.push(scaler.apply(Channel::PriceF, records[lag_day_start + j].price_f));
                }
            }
        }
        for (flag, ch) in [
            (config.use_load_b, Channel::LoadB),
            (config.use_load_f, Channel::LoadF),
            (config.use_gen_b, Channel::GenB),
            (config.use_gen_f, Channel::GenF),
        ] {
            if flag {
                for j in 0..24 {
                    rows.push(scaler.apply(ch, records[day_start + j].channel(ch)));
                }
            }
        }
        if config.use_holiday_b {
            rows.push(records[day_start].holiday_b as u8 as f64);
        }
        if config.use_holiday_f {
            rows.push(records[day_start].holiday_f as u8 as f64);
        }

        for j in 0..24 {
            targets.push(scaler.apply(Channel::PriceB, records[day_start + j].price_b));
        }
        if dual {
            for j in 0..24 {
                targets.push(scaler.apply(Channel::PriceF, records[day_start + j].price_f));
            }
        }
        origin_days.push(date);
    }

    if origin_days.is_empty() {
        return Err(FeatureSpaceError::SliceTooShort {
            needed: lag_days,
            got: n_days,
        });
    }
    let n_rows = origin_days.len();
    Ok(SampleSet {
        inputs: Matrix::from_vec(n_rows, n, rows),
        targets: Matrix::from_vec(n_rows, m, targets),
        origin_days,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{fit_scaler, synth_generate};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(past_days: u32, weekly_lags: u32) -> FeatureConfig {
        FeatureConfig {
            past_days,
            weekly_lags,
            use_price_f: false,
            use_load_b: false,
            use_load_f: false,
            use_gen_b: false,
            use_gen_f: false,
            use_holiday_b: false,
            use_holiday_f: false,
            n1: 100,
            n2: 0,
        }
    }

    /// Independent dimension count: explicitly enumerate every input column
    /// one channel at a time.
    fn enumerated_dimension(c: &FeatureConfig) -> usize {
        let mut count = 0;
        count += price_lag_offsets(c).len(); // B price lags
        if c.use_price_f {
            count += price_lag_offsets(c).len();
        }
        for flag in [c.use_load_b, c.use_load_f, c.use_gen_b, c.use_gen_f] {
            if flag {
                count += 24;
            }
        }
        count += c.use_holiday_b as usize + c.use_holiday_f as usize;
        count
    }

    #[test]
    fn dimension_example_with_neighbour_blocks() {
        let mut c = config(2, 1);
        c.use_price_f = true;
        c.use_load_f = true;
        c.use_gen_f = true;
        assert_eq!(input_dimension(&c).unwrap(), 192);
        assert_eq!(enumerated_dimension(&c), 192);
    }

    #[test]
    fn dimension_minimal_config() {
        let c = config(1, 1);
        assert_eq!(input_dimension(&c).unwrap(), 48);
    }

    #[test]
    fn dimension_rejects_out_of_domain_lag_count() {
        let c = config(7, 1);
        assert!(matches!(
            input_dimension(&c),
            Err(FeatureSpaceError::InvalidConfig(_))
        ));
    }

    #[test]
    fn first_usable_target_day_respects_lag_depth() {
        let series = synth_generate(1, 60, 0.5);
        let scaler = fit_scaler(&series).unwrap();
        let ten_days = MarketSeries::new(series.records()[..240].to_vec(), "t");
        let s = build_samples(&config(1, 1), &ten_days, &scaler, false).unwrap();
        assert_eq!(s.len(), 3); // target days 8, 9, 10
        assert_eq!(
            s.origin_days[0],
            ten_days.first_date().unwrap() + chrono::Duration::days(7)
        );
    }

    #[test]
    fn dual_targets_extend_single_targets() {
        let series = synth_generate(2, 60, 0.5);
        let scaler = fit_scaler(&series).unwrap();
        let single = build_samples(&config(2, 1), &series, &scaler, false).unwrap();
        let dual = build_samples(&config(2, 1), &series, &scaler, true).unwrap();
        assert_eq!(single.targets.cols(), 24);
        assert_eq!(dual.targets.cols(), 48);
        for row in 0..single.len() {
            assert_eq!(&dual.targets.row(row)[..24], single.targets.row(row));
        }
    }

    #[test]
    fn slice_too_short_detected() {
        let series = synth_generate(3, 60, 0.5);
        let scaler = fit_scaler(&series).unwrap();
        let three_days = MarketSeries::new(series.records()[..72].to_vec(), "t");
        assert!(matches!(
            build_samples(&config(1, 1), &three_days, &scaler, false),
            Err(FeatureSpaceError::SliceTooShort { .. })
        ));
    }

    #[test]
    fn weekly_block_is_the_day_exactly_k_weeks_before() {
        let series = synth_generate(4, 60, 0.5);
        let scaler = fit_scaler(&series).unwrap();
        let s = build_samples(&config(1, 2), &series, &scaler, false).unwrap();
        // First sample targets day 14 (0-based); weekly block k=1 must equal
        // the scaled B prices of day 7, k=2 those of day 0.
        let records = series.records();
        let row = s.inputs.row(0);
        for j in 0..24 {
            let expect_k1 = scaler.apply(Channel::PriceB, records[7 * 24 + j].price_b);
            assert_eq!(row[24 + j], expect_k1);
            let expect_k2 = scaler.apply(Channel::PriceB, records[j].price_b);
            assert_eq!(row[48 + j], expect_k2);
        }
    }

    #[test]
    fn daily_lags_most_recent_first() {
        let series = synth_generate(4, 60, 0.5);
        let scaler = fit_scaler(&series).unwrap();
        let s = build_samples(&config(2, 1), &series, &scaler, false).unwrap();
        let records = series.records();
        // first sample targets day 7; deadline index = 7*24 - 1
        let row = s.inputs.row(0);
        for i in 0..48 {
            let expect = scaler.apply(Channel::PriceB, records[7 * 24 - 1 - i].price_b);
            assert_eq!(row[i], expect);
        }
    }

    #[test]
    fn toggling_flag_off_removes_exactly_its_block() {
        let series = synth_generate(5, 60, 0.5);
        let scaler = fit_scaler(&series).unwrap();
        let mut with = config(1, 1);
        with.use_load_f = true;
        with.use_gen_f = true;
        let mut without = with;
        without.use_load_f = false;

        let a = build_samples(&with, &series, &scaler, false).unwrap();
        let b = build_samples(&without, &series, &scaler, false).unwrap();
        // layout of `with`: [B daily 24][B weekly 24][load_F 24][gen_F 24]
        let block_start = 48;
        let block_end = 72;
        for row in 0..a.len() {
            let ra = a.inputs.row(row);
            let rb = b.inputs.row(row);
            assert_eq!(&ra[..block_start], &rb[..block_start]);
            assert_eq!(&ra[block_end..], &rb[block_start..]);
        }
    }

    #[test]
    fn collapsed_domain_forces_value() {
        let mut space = SearchSpace::default();
        space.freeze_off(Coord::GenB).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            assert!(!sample_config(&space, &mut rng).use_gen_b);
        }
    }

    #[test]
    fn seeded_draws_reproducible() {
        let space = SearchSpace::default();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| sample_config(&space, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }

    #[test]
    fn uniform_draw_frequencies() {
        let space = SearchSpace::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0usize; 6];
        let n = 10_000;
        for _ in 0..n {
            let c = sample_config(&space, &mut rng);
            counts[(c.past_days - 1) as usize] += 1;
        }
        for (v, &count) in counts.iter().enumerate() {
            let freq = count as f64 / n as f64;
            assert!(
                (freq - 1.0 / 6.0).abs() <= 0.02,
                "value {} frequency {freq}",
                v + 1
            );
        }
    }

    #[test]
    fn kv_block_round_trip_uses_exact_keys() {
        let mut c = config(3, 2);
        c.use_price_f = true;
        c.n1 = 320;
        c.n2 = 200;
        let block = c.to_kv_block();
        assert!(block.contains("theta_pBd = 3"));
        assert!(block.contains("theta_pF = 1"));
        assert!(block.contains("n2 = 200"));
        let back = FeatureConfig::from_kv_block(&block).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn price_lag_offsets_stay_before_target_day() {
        for pd in 1..=6 {
            for wl in 1..=3 {
                let offsets = price_lag_offsets(&config(pd, wl));
                assert_eq!(offsets.len(), 24 * (pd + wl) as usize);
                // all offsets nonnegative by type; check the weekly blocks
                // reach exactly the day k weeks before the target day
                for k in 1..=wl as usize {
                    assert!(offsets.contains(&(168 * k - 24)));
                    assert!(offsets.contains(&(168 * k - 1)));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn dimension_matches_built_width(
            past_days in 1u32..=6,
            weekly_lags in 1u32..=3,
            flags in proptest::array::uniform7(proptest::bool::ANY),
        ) {
            let c = FeatureConfig {
                past_days,
                weekly_lags,
                use_price_f: flags[0],
                use_load_b: flags[1],
                use_load_f: flags[2],
                use_gen_b: flags[3],
                use_gen_f: flags[4],
                use_holiday_b: flags[5],
                use_holiday_f: flags[6],
                n1: 100,
                n2: 0,
            };
            let series = synth_generate(1, 60, 0.5);
            let scaler = fit_scaler(&series).unwrap();
            let s = build_samples(&c, &series, &scaler, false).unwrap();
            prop_assert_eq!(s.inputs.cols(), input_dimension(&c).unwrap());
            prop_assert_eq!(s.inputs.cols(), enumerated_dimension(&c));
        }
    }
}
