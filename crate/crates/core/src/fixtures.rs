//! Synthetic demand and capacity-factor profiles for tests and demos.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::optimizer::FixtureKind;
use crate::profiles::{HourlyProfile, ProfileError, UnitTag, DAYS_PER_YEAR, HOURS_PER_DAY, HOURS_PER_YEAR};
use crate::pv_model::{calibrate_cf, PvError};

pub const RESIDENTIAL_MEAN_KWH: f64 = 5915.0;
pub const RESIDENTIAL_MAX_KW: f64 = 12.3;
pub const RESIDENTIAL_MIN_KW: f64 = 0.05;
pub const COMMERCIAL_MEAN_KWH: f64 = 150_000.0;
pub const TARGET_CF: f64 = 0.135;

/// Stream ids separating the capacity-factor draw from house draws.
const CF_STREAM: u64 = u64::MAX;

pub fn fixture_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date")
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn bump(x: f64, centre: f64, width: f64) -> f64 {
    let d = x - centre;
    (-0.5 * d * d / (width * width)).exp()
}

/// Relative level by day of year; January heaviest, a smaller August bump.
fn residential_season(day: usize) -> f64 {
    let a = 2.0 * PI * day as f64 / DAYS_PER_YEAR as f64;
    1.0 + 0.32 * (a - 2.0 * PI * 15.0 / 365.0).cos() + 0.12 * (2.0 * a - 2.0 * PI * 2.0 * 215.0 / 365.0).cos()
}

fn residential_shape(hour: f64, shift: f64, evening_weight: f64) -> f64 {
    0.35 + 0.9 * bump(hour, 7.0 + shift, 1.3) + evening_weight * bump(hour, 19.5 + shift, 2.0) + 0.25 * bump(hour, 12.5, 2.5)
}

fn house_values(seed: u64, house: u64) -> Vec<f64> {
    let mut r = rng(seed, house);
    let shift: f64 = r.random_range(-1.0..1.0);
    let evening: f64 = r.random_range(1.0..1.8);
    let noise = LogNormal::new(0.0, 0.35).expect("valid lognormal");
    (0..HOURS_PER_YEAR)
        .map(|h| {
            let day = h / HOURS_PER_DAY;
            let hod = (h % HOURS_PER_DAY) as f64;
            residential_shape(hod, shift, evening) * residential_season(day) * noise.sample(&mut r)
        })
        .collect()
}

fn commercial_values(seed: u64, building: u64) -> Vec<f64> {
    let mut r = rng(seed, building);
    let open: f64 = r.random_range(7.5..9.0);
    let close: f64 = r.random_range(19.0..22.0);
    let noise = LogNormal::new(0.0, 0.08).expect("valid lognormal");
    let start = fixture_start();
    (0..HOURS_PER_YEAR)
        .map(|h| {
            let day = h / HOURS_PER_DAY;
            let hod = (h % HOURS_PER_DAY) as f64 + 0.5;
            let date = start + chrono::Days::new(day as u64);
            let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
            let ramp = |x: f64| 1.0 / (1.0 + (-2.5 * x).exp());
            let plateau = ramp(hod - open) * ramp(close - hod);
            let level = if weekend { 0.6 } else { 1.0 };
            let season = 1.0 + 0.15 * (4.0 * PI * (day as f64 - 20.0) / 365.0).cos();
            (0.15 + 0.85 * level * plateau) * season * noise.sample(&mut r)
        })
        .collect()
}

fn scale_to(values: &mut [f64], total: f64) {
    let s: f64 = values.iter().sum();
    values.iter_mut().for_each(|v| *v *= total / s);
}

/// Annual totals with the given mean, lognormal spread across units.
fn unit_totals(seed: u64, n: usize, mean: f64, sigma: f64) -> Vec<f64> {
    let mut r = rng(seed, CF_STREAM - 1);
    let d = LogNormal::new(0.0, sigma).expect("valid lognormal");
    let w: Vec<f64> = (0..n).map(|_| d.sample(&mut r)).collect();
    let m = w.iter().sum::<f64>() / n as f64;
    w.iter().map(|x| mean * x / m).collect()
}

/// Hourly demand for `n` houses or buildings, keyed `H001`, `H002`, ...
pub fn synth_demand(kind: FixtureKind, n: usize, seed: u64) -> Result<BTreeMap<String, HourlyProfile>, ProfileError> {
    let (mean, sigma) = match kind {
        FixtureKind::Residential => (RESIDENTIAL_MEAN_KWH, 0.4),
        FixtureKind::Commercial => (COMMERCIAL_MEAN_KWH, 0.6),
    };
    let totals = unit_totals(seed, n, mean, sigma);
    (0..n)
        .map(|i| {
            let mut v = match kind {
                FixtureKind::Residential => house_values(seed, i as u64),
                FixtureKind::Commercial => commercial_values(seed, i as u64),
            };
            scale_to(&mut v, totals[i]);
            let p = HourlyProfile::from_values(v, UnitTag::EnergyKwh, fixture_start())?;
            Ok((format!("H{:03}", i + 1), p))
        })
        .collect()
}

/// Raw clear-sky-times-weather capacity factor before calibration.
fn raw_cf(seed: u64) -> Vec<f64> {
    let mut r = rng(seed, CF_STREAM);
    let mut out = Vec::with_capacity(HOURS_PER_YEAR);
    for day in 0..DAYS_PER_YEAR {
        let a = 2.0 * PI * (day as f64 - 172.0) / DAYS_PER_YEAR as f64;
        let day_len = 12.2 + 2.4 * a.cos();
        let sunrise = 12.0 - day_len / 2.0;
        let elevation = 0.75 + 0.25 * a.cos();
        let weather: f64 = r.random_range(0.15..1.0);
        for hod in 0..HOURS_PER_DAY {
            let t = hod as f64 + 0.5 - sunrise;
            let v = if t > 0.0 && t < day_len {
                let jitter: f64 = r.random_range(0.9..1.1);
                elevation * weather * (PI * t / day_len).sin() * jitter
            } else {
                0.0
            };
            out.push(v.clamp(0.0, 1.0));
        }
    }
    out
}

/// Capacity factor with daylight-only output, before calibration.
pub fn synth_cf_raw(seed: u64) -> Result<HourlyProfile, ProfileError> {
    HourlyProfile::from_values(raw_cf(seed), UnitTag::CapacityFactor, fixture_start())
}

/// [`synth_cf_raw`] scaled to an annual mean of `target_cf`.
pub fn synth_cf(seed: u64, target_cf: f64) -> Result<HourlyProfile, PvError> {
    calibrate_cf(&synth_cf_raw(seed)?, target_cf)
}

/// Reshapes a demand profile so that its total, hourly maximum and hourly
/// minimum hit the given values. Values are mapped as
/// `min + (max - min) * x^gamma` with `x` the min-max normalised input and
/// `gamma` found by bisection, so the ordering of hours is preserved.
pub fn calibrate_stats(
    profile: &HourlyProfile,
    total: f64,
    max: f64,
    min: f64,
) -> Result<HourlyProfile, ProfileError> {
    let v = profile.dense()?;
    let n = v.len() as f64;
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let target_mean = (total / n - min) / (max - min);
    if !(hi > lo) || !(max > min) || !(target_mean > 0.0 && target_mean < 1.0) {
        return Err(ProfileError::StatsUnreachable(format!(
            "total {total} between {min} and {max} kWh/h"
        )));
    }
    let x: Vec<f64> = v.iter().map(|&y| (y - lo) / (hi - lo)).collect();
    let mean_at = |g: f64| x.iter().map(|xi| xi.powf(g)).sum::<f64>() / n;
    // mean is decreasing in gamma
    let (mut g_lo, mut g_hi) = (1e-3, 1.0);
    while mean_at(g_hi) > target_mean {
        g_hi *= 2.0;
        if g_hi > 1e4 {
            return Err(ProfileError::StatsUnreachable("total too small for the profile shape".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (g_lo + g_hi);
        if mean_at(mid) > target_mean {
            g_lo = mid;
        } else {
            g_hi = mid;
        }
    }
    let g = 0.5 * (g_lo + g_hi);
    profile.map(UnitTag::EnergyKwh, |_, y| min + (max - min) * ((y - lo) / (hi - lo)).powf(g))
}
