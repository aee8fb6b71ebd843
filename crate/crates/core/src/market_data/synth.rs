//! Deterministic synthetic two-market generator for tests and studies.
//!
//! Market F prices follow a daily+weekly seasonal process driven by its own
//! grid load and generation forecasts. Market B prices mix an F-driven
//! component (weight `coupling`) with an independent autoregressive
//! component (weight `1 - coupling`) plus observation noise. The F-driven
//! component anchors partly on the previous day's realized F prices, the
//! cross-market price transmission that makes the neighbour market's price
//! lags genuinely informative beyond its load/generation forecasts.
//! `load_B` is generated independently of `price_B`, making it a
//! known-irrelevant feature; `gen_B` is likewise independent.
//!
//! Determinism: all randomness comes from a ChaCha8 stream keyed by `seed`
//! (a counter-based cipher, so output is identical across platforms).
//! Uniforms take the top 53 bits of each 64-bit word; approximately normal
//! noise is the centered sum of six uniforms scaled to unit variance. The
//! per-hour draw order is fixed: load_F, gen_F, market level, price_F,
//! independent component, price_B, load_B, gen_B.

use super::{HourlyRecord, MarketSeries};
use chrono::NaiveDate;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// First generated day, a Monday, so weekday cycles start aligned.
pub const SYNTH_BASE_DATE: (i32, u32, u32) = (2012, 1, 2);

// Hour-of-day shapes, roughly in [-1, 1].
const LOAD_SHAPE: [f64; 24] = [
    -0.9, -1.0, -1.0, -0.95, -0.85, -0.6, -0.2, 0.3, 0.7, 0.85, 0.9, 0.95, 0.9, 0.8, 0.7, 0.65,
    0.7, 0.85, 1.0, 0.95, 0.7, 0.4, -0.1, -0.5,
];
const PRICE_PEAK: [f64; 24] = [
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.2, 0.6, 1.0, 0.8, 0.5, 0.4, 0.3, 0.2, 0.2, 0.2, 0.3, 0.6, 1.0,
    0.9, 0.6, 0.3, 0.1, 0.0,
];
const GEN_SHAPE: [f64; 24] = [
    -0.2, -0.3, -0.3, -0.3, -0.2, -0.1, 0.0, 0.2, 0.5, 0.8, 1.0, 1.0, 0.9, 0.8, 0.6, 0.4, 0.2, 0.0,
    -0.1, -0.1, -0.1, -0.2, -0.2, -0.2,
];
const INDEP_SHAPE: [f64; 24] = [
    -1.0, -0.9, -0.8, -0.8, -0.7, -0.4, 0.0, 0.5, 0.8, 0.6, 0.4, 0.3, 0.2, 0.1, 0.0, 0.1, 0.3, 0.7,
    1.0, 0.9, 0.6, 0.2, -0.3, -0.7,
];
const LOAD_B_SHAPE: [f64; 24] = [
    0.3, 0.1, -0.1, -0.4, -0.6, -0.8, -1.0, -0.7, -0.2, 0.2, 0.5, 0.8, 1.0, 0.9, 0.7, 0.5, 0.4,
    0.3, 0.2, 0.3, 0.5, 0.6, 0.5, 0.4,
];
// Monday..Sunday
const WEEK_SHAPE: [f64; 7] = [0.8, 1.0, 1.0, 0.9, 0.7, -0.8, -1.0];

struct Ar {
    phi: f64,
    sigma: f64,
    state: f64,
}

impl Ar {
    fn new(phi: f64, sigma: f64, init_noise: f64) -> Self {
        // start at the stationary scale so no burn-in is needed
        let stationary = sigma / (1.0 - phi * phi).sqrt();
        Self {
            phi,
            sigma,
            state: stationary * init_noise,
        }
    }

    fn step(&mut self, noise: f64) -> f64 {
        self.state = self.phi * self.state + self.sigma * noise;
        self.state
    }
}

struct NoiseSource {
    rng: ChaCha8Rng,
}

impl NoiseSource {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Centered Irwin-Hall(6) scaled to unit variance; no transcendentals,
    /// so it is bit-stable everywhere.
    fn gauss(&mut self) -> f64 {
        let mut s = 0.0;
        for _ in 0..6 {
            s += self.uniform();
        }
        (s - 3.0) * std::f64::consts::SQRT_2
    }
}

fn triangle_annual(day: usize) -> f64 {
    let x = (day % 365) as f64 / 365.0;
    1.0 - 4.0 * (x - 0.5).abs()
}

// Pseudo-holiday calendars: fixed integer mixes of the day index, ~3% of
// days, independent between the two markets.
fn holiday_f(day: usize) -> bool {
    (day as u64).wrapping_mul(2654435761) % 97 < 3
}

fn holiday_b(day: usize) -> bool {
    (day as u64).wrapping_mul(0x9E3779B97F4A7C15) % 101 < 3
}

/// Generates `n_days` of coupled two-market data. Deterministic in `seed`.
///
/// `coupling` must lie in `[0, 1]` and `n_days >= 60`.
pub fn synth_generate(seed: u64, n_days: usize, coupling: f64) -> MarketSeries {
    assert!(n_days >= 60, "synth_generate requires n_days >= 60");
    assert!(
        (0.0..=1.0).contains(&coupling),
        "coupling must lie in [0, 1]"
    );

    let mut noise = NoiseSource::new(seed);
    let mut ar_load_f = Ar::new(0.985, 600.0, noise.gauss());
    let mut ar_gen_f = Ar::new(0.998, 150.0, noise.gauss());

    let mut ar_indep = Ar::new(0.97, 2.0, noise.gauss());
    let mut ar_load_b = Ar::new(0.995, 80.0, noise.gauss());
    let mut ar_gen_b = Ar::new(0.995, 120.0, noise.gauss());

    let base = NaiveDate::from_ymd_opt(SYNTH_BASE_DATE.0, SYNTH_BASE_DATE.1, SYNTH_BASE_DATE.2)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();

    // ring buffer of the previous day's F prices; one burn-in day fills it
    let mut prev_price_f = [0.0_f64; 24];
    let mut records = Vec::with_capacity(n_days * 24);
    for signed_day in -1..n_days as i64 {
        let burn_in = signed_day < 0;
        let day = signed_day.max(0) as usize;
        let week = WEEK_SHAPE[(signed_day.rem_euclid(7)) as usize];
        let annual = triangle_annual(day);
        let hol_f = !burn_in && holiday_f(day);
        let hol_b = !burn_in && holiday_b(day);
        for hour in 0..24 {
            let e_lf = noise.gauss();
            let e_gf = noise.gauss();
            let e_pf = noise.gauss();
            let e_ind = noise.gauss();
            let e_pb = noise.gauss();
            let e_lb = noise.gauss();
            let e_gb = noise.gauss();

            let load_f =
                52_000.0 + 9_000.0 * LOAD_SHAPE[hour] + 2_600.0 * week + ar_load_f.step(e_lf)
                    - if hol_f { 8_000.0 } else { 0.0 };
            let gen_f =
                58_000.0 + 4_000.0 * GEN_SHAPE[hour] + 2_500.0 * annual + ar_gen_f.step(e_gf);

            // systematic F price: published day-ahead forecasts, hour-of-day
            // peak shape, a convex scarcity term when the load/generation
            // margin tightens (merit-order curvature), and the slow market
            // price level only the price history reveals
            let margin = ((load_f - 0.82 * gen_f) / 4500.0).max(0.0);
            let core = 15.0
                + 0.0016 * (load_f - 0.55 * gen_f)
                + 3.5 * PRICE_PEAK[hour]
                + 1.5 * margin * margin;
            let price_f = core + 1.5 * e_pf;

            // cross-market transmission: B couples to the F fundamentals and
            // to yesterday's realized F price for the same hour
            let f_driven = 0.8 * core + 0.2 * prev_price_f[hour];
            prev_price_f[hour] = price_f;

            let indep = 40.0 + 8.0 * INDEP_SHAPE[hour] + ar_indep.step(e_ind)
                - if hol_b { 4.0 } else { 0.0 };
            let price_b = coupling * f_driven + (1.0 - coupling) * indep + 1.2 * e_pb;

            let load_b = 11_500.0 + 900.0 * LOAD_B_SHAPE[hour] + ar_load_b.step(e_lb);
            let gen_b = 13_500.0 + 900.0 * triangle_annual(day + 100) + ar_gen_b.step(e_gb);

            if burn_in {
                continue;
            }
            records.push(HourlyRecord {
                timestamp: base + chrono::Duration::hours((day * 24 + hour) as i64),
                price_b,
                price_f,
                load_b,
                load_f,
                gen_b,
                gen_f,
                holiday_b: hol_b,
                holiday_f: hol_f,
            });
        }
    }
    MarketSeries::new(
        records,
        format!("synth(seed={seed},n_days={n_days},coupling={coupling})"),
    )
}
