//! Daylight-saving repair: interpolate the missing spring hour, drop the
//! duplicated fall hour, leave complete days untouched.

use super::{HourlyRecord, MarketDataError, MarketSeries};
use chrono::NaiveDate;

/// Normalizes a series so that every calendar day contributes exactly 24
/// records with hours 0..=23.
///
/// A 23-record day must be missing exactly one hour; the gap is filled by
/// linear interpolation of all numeric channels between the chronological
/// neighbours (holiday flags are copied, they are constant within a day).
/// A 25-record day must contain exactly one hour twice; the first occurrence
/// is kept. Anything else, including whole missing days, is unrepairable.
pub fn repair_dst(series: &MarketSeries) -> Result<MarketSeries, MarketDataError> {
    let records = series.records();
    if records.is_empty() {
        return Err(MarketDataError::UnrepairableDay {
            date: NaiveDate::default(),
            count: 0,
        });
    }

    let mut days: Vec<(NaiveDate, Vec<&HourlyRecord>)> = Vec::new();
    for r in records {
        match days.last_mut() {
            Some((date, bucket)) if *date == r.date() => bucket.push(r),
            _ => days.push((r.date(), vec![r])),
        }
    }
    for w in days.windows(2) {
        let expected = w[0].0.succ_opt();
        if expected != Some(w[1].0) {
            return Err(MarketDataError::UnrepairableDay {
                date: expected.unwrap_or_default(),
                count: 0,
            });
        }
    }

    let mut repaired: Vec<HourlyRecord> = Vec::with_capacity(days.len() * 24);
    for (di, (date, bucket)) in days.iter().enumerate() {
        let unrepairable = || MarketDataError::UnrepairableDay {
            date: *date,
            count: bucket.len(),
        };
        match bucket.len() {
            24 => {
                if !hours_complete(bucket) {
                    return Err(unrepairable());
                }
                repaired.extend(bucket.iter().map(|r| (*r).clone()));
            }
            23 => {
                let mut seen = [false; 24];
                for r in bucket {
                    let h = r.hour() as usize;
                    if seen[h] {
                        return Err(unrepairable());
                    }
                    seen[h] = true;
                }
                let missing = seen.iter().position(|s| !s).unwrap() as u32;
                // Chronological neighbours of the gap; a gap at the first or
                // last hour of the day borrows from the adjacent day.
                let next: &HourlyRecord = match bucket.iter().find(|r| r.hour() > missing) {
                    Some(r) => r,
                    None => match days.get(di + 1).and_then(|(_, b)| b.first()) {
                        Some(r) => r,
                        None => return Err(unrepairable()),
                    },
                };
                let prev: HourlyRecord = match bucket.iter().rev().find(|r| r.hour() < missing) {
                    Some(r) => (*r).clone(),
                    None => match repaired.last() {
                        Some(r) => r.clone(),
                        None => return Err(unrepairable()),
                    },
                };
                let filled = interpolate(
                    &prev,
                    next,
                    date.and_hms_opt(missing, 0, 0).unwrap(),
                    bucket[0],
                );
                let mut day: Vec<HourlyRecord> = bucket.iter().map(|r| (*r).clone()).collect();
                day.insert(missing as usize, filled);
                repaired.extend(day);
            }
            25 => {
                let mut counts = [0usize; 24];
                for r in bucket {
                    counts[r.hour() as usize] += 1;
                }
                let dup_ok = counts.iter().filter(|&&c| c == 2).count() == 1
                    && counts.iter().all(|&c| (1..=2).contains(&c));
                if !dup_ok {
                    return Err(unrepairable());
                }
                let mut seen = [false; 24];
                for r in bucket {
                    let h = r.hour() as usize;
                    if seen[h] {
                        continue; // second occurrence dropped
                    }
                    seen[h] = true;
                    repaired.push((*r).clone());
                }
            }
            _ => return Err(unrepairable()),
        }
    }

    let out = MarketSeries::new(repaired, series.provenance().to_string());
    out.validate_hourly()?;
    Ok(out)
}

fn hours_complete(bucket: &[&HourlyRecord]) -> bool {
    bucket
        .iter()
        .enumerate()
        .all(|(h, r)| r.hour() as usize == h)
}

fn interpolate(
    prev: &HourlyRecord,
    next: &HourlyRecord,
    timestamp: chrono::NaiveDateTime,
    same_day: &HourlyRecord,
) -> HourlyRecord {
    let span = (next.timestamp - prev.timestamp).num_hours() as f64;
    let frac = (timestamp - prev.timestamp).num_hours() as f64 / span;
    let lerp = |a: f64, b: f64| a + (b - a) * frac;
    HourlyRecord {
        timestamp,
        price_b: lerp(prev.price_b, next.price_b),
        price_f: lerp(prev.price_f, next.price_f),
        load_b: lerp(prev.load_b, next.load_b),
        load_f: lerp(prev.load_f, next.load_f),
        gen_b: lerp(prev.gen_b, next.gen_b),
        gen_f: lerp(prev.gen_f, next.gen_f),
        holiday_b: same_day.holiday_b,
        holiday_f: same_day.holiday_f,
    }
}
