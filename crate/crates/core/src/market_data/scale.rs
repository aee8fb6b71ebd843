//! Per-channel affine min-max scaling to `[-1, 1]`, fitted on the training
//! slice only. Holiday flags already live in `{0, 1}` and bypass scaling.

use super::{MarketDataError, MarketSeries};
use serde::{Deserialize, Serialize};

/// The six numeric channels of the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    PriceB,
    PriceF,
    LoadB,
    LoadF,
    GenB,
    GenF,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::PriceB,
        Channel::PriceF,
        Channel::LoadB,
        Channel::LoadF,
        Channel::GenB,
        Channel::GenF,
    ];

    fn index(self) -> usize {
        match self {
            Channel::PriceB => 0,
            Channel::PriceF => 1,
            Channel::LoadB => 2,
            Channel::LoadF => 3,
            Channel::GenB => 4,
            Channel::GenF => 5,
        }
    }
}

/// Training-slice min/max per channel. The training min maps to -1 and the
/// max to +1; validation or test values outside the training range map
/// outside `[-1, 1]`, which is allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    min: [f64; 6],
    max: [f64; 6],
}

impl ScalingParams {
    pub fn bounds(&self, ch: Channel) -> (f64, f64) {
        (self.min[ch.index()], self.max[ch.index()])
    }

    pub fn from_bounds(min: [f64; 6], max: [f64; 6]) -> Self {
        Self { min, max }
    }

    #[inline]
    pub fn apply(&self, ch: Channel, x: f64) -> f64 {
        let i = ch.index();
        2.0 * (x - self.min[i]) / (self.max[i] - self.min[i]) - 1.0
    }

    #[inline]
    pub fn invert(&self, ch: Channel, y: f64) -> f64 {
        let i = ch.index();
        (y + 1.0) * 0.5 * (self.max[i] - self.min[i]) + self.min[i]
    }
}

/// Fits min-max bounds on the training slice. Receiving only the train slice
/// is what keeps validation/test values out of the scaler by construction.
pub fn fit_scaler(train: &MarketSeries) -> Result<ScalingParams, MarketDataError> {
    let mut min = [f64::INFINITY; 6];
    let mut max = [f64::NEG_INFINITY; 6];
    for r in train.records() {
        for ch in Channel::ALL {
            let v = r.channel(ch);
            let i = ch.index();
            min[i] = min[i].min(v);
            max[i] = max[i].max(v);
        }
    }
    for ch in Channel::ALL {
        let i = ch.index();
        let spread_ok = max[i] > min[i];
        if !spread_ok {
            return Err(MarketDataError::DegenerateChannel(ch));
        }
    }
    Ok(ScalingParams { min, max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::HourlyRecord;
    use chrono::NaiveDate;

    fn series_with_prices(prices: &[f64]) -> MarketSeries {
        let start = NaiveDate::from_ymd_opt(2015, 1, 5).unwrap();
        let records = prices
            .iter()
            .enumerate()
            .map(|(i, &p)| HourlyRecord {
                timestamp: start.and_hms_opt(0, 0, 0).unwrap() + chrono::Duration::hours(i as i64),
                price_b: p,
                price_f: p + 1.0,
                load_b: 2.0 * p + 1.0,
                load_f: 3.0 * p + 1.0,
                gen_b: 4.0 * p + 1.0,
                gen_f: 5.0 * p + 1.0,
                holiday_b: false,
                holiday_f: false,
            })
            .collect();
        MarketSeries::new(records, "t")
    }

    #[test]
    fn endpoints_map_to_unit_interval() {
        let series = series_with_prices(&[0.0, 50.0, 100.0]);
        let params = fit_scaler(&series).unwrap();
        assert_eq!(params.apply(Channel::PriceB, 0.0), -1.0);
        assert_eq!(params.apply(Channel::PriceB, 100.0), 1.0);
        assert_eq!(params.apply(Channel::PriceB, 50.0), 0.0);
    }

    #[test]
    fn round_trip_identity() {
        let series = series_with_prices(&[13.0, 87.5, 42.0, 99.9]);
        let params = fit_scaler(&series).unwrap();
        for ch in Channel::ALL {
            for &x in &[13.7, -5.0, 250.0, 0.0, 1e6] {
                let back = params.invert(ch, params.apply(ch, x));
                let tolerance = 1e-12 * x.abs().max(1.0);
                assert!((back - x).abs() <= tolerance, "{ch:?} {x} -> {back}");
            }
        }
    }

    #[test]
    fn constant_channel_rejected() {
        let series = series_with_prices(&[5.0, 5.0, 5.0]);
        match fit_scaler(&series) {
            Err(MarketDataError::DegenerateChannel(ch)) => assert_eq!(ch, Channel::PriceB),
            other => panic!("expected DegenerateChannel, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_values_may_leave_unit_interval() {
        let series = series_with_prices(&[0.0, 100.0]);
        let params = fit_scaler(&series).unwrap();
        assert!(params.apply(Channel::PriceB, 150.0) > 1.0);
        assert!(params.apply(Channel::PriceB, -10.0) < -1.0);
    }
}
