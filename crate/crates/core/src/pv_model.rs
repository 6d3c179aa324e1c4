//! Hourly PV output from a capacity-factor profile.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::{HourlyProfile, ProfileError, UnitTag};

/// Rooftop area needed per kW of panels, in m².
pub const DEFAULT_ROOF_M2_PER_KW: f64 = 8.29;
pub const DEFAULT_PV_DEGRADATION: f64 = 0.005;

const CALIBRATION_MAX_ITERS: usize = 5;
const CALIBRATION_TOL: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum PvError {
    #[error("capacity factor profile must be gap-free with a positive mean")]
    DegenerateProfile,
    #[error("target annual capacity factor {0} outside (0, 1)")]
    TargetOutOfRange(f64),
    #[error("calibration did not reach target {target}: achieved mean {achieved}")]
    Unreachable { target: f64, achieved: f64 },
    #[error("invalid PV configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvConfig {
    pub capacity_kw: f64,
    pub annual_degradation: f64,
    pub max_capacity_kw: f64,
}

impl PvConfig {
    pub fn new(capacity_kw: f64, annual_degradation: f64, max_capacity_kw: f64) -> Result<Self, PvError> {
        if !(max_capacity_kw > 0.0) {
            return Err(PvError::InvalidConfig(format!("max capacity {max_capacity_kw} must be positive")));
        }
        if !(0.0..=max_capacity_kw).contains(&capacity_kw) {
            return Err(PvError::InvalidConfig(format!(
                "capacity {capacity_kw} kW outside [0, {max_capacity_kw}]"
            )));
        }
        if !(0.0..1.0).contains(&annual_degradation) {
            return Err(PvError::InvalidConfig(format!("degradation {annual_degradation} outside [0, 1)")));
        }
        Ok(Self { capacity_kw, annual_degradation, max_capacity_kw })
    }

    /// Output multiplier in a given project year (year 0 is new).
    pub fn degradation_factor(&self, project_year: u32) -> f64 {
        (1.0 - self.annual_degradation).powi(project_year as i32)
    }
}

/// Largest installable capacity on a given rooftop area.
pub fn max_capacity_from_roof(area_m2: f64, m2_per_kw: f64) -> f64 {
    area_m2 / m2_per_kw
}

fn clipped_mean(values: &[f64], scale: f64) -> f64 {
    values.iter().map(|v| (v * scale).min(1.0)).sum::<f64>() / values.len() as f64
}

/// Rescales a capacity-factor profile so its annual mean matches
/// `target_annual_cf`. Scaled values are clipped at 1. After clipping the
/// scale is re-derived so that the unclipped hours make up the remaining
/// energy, at most five times, until the mean is within 1e-4 of the target.
pub fn calibrate_cf(profile: &HourlyProfile, target_annual_cf: f64) -> Result<HourlyProfile, PvError> {
    if !(target_annual_cf > 0.0 && target_annual_cf < 1.0) {
        return Err(PvError::TargetOutOfRange(target_annual_cf));
    }
    let values = profile.dense().map_err(|_| PvError::DegenerateProfile)?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if !(mean > 0.0) {
        return Err(PvError::DegenerateProfile);
    }
    let mut scale = target_annual_cf / mean;
    let mut achieved = clipped_mean(&values, scale);
    for _ in 0..CALIBRATION_MAX_ITERS {
        if (achieved - target_annual_cf).abs() <= CALIBRATION_TOL {
            break;
        }
        let n = values.len() as f64;
        let (clipped, free_sum) = values.iter().fold((0.0, 0.0), |(c, f), &v| {
            if v * scale >= 1.0 { (c + 1.0, f) } else { (c, f + v) }
        });
        let remaining = n * target_annual_cf - clipped;
        if free_sum <= 0.0 || remaining <= 0.0 {
            break;
        }
        scale = remaining / free_sum;
        achieved = clipped_mean(&values, scale);
    }
    if (achieved - target_annual_cf).abs() > CALIBRATION_TOL {
        return Err(PvError::Unreachable { target: target_annual_cf, achieved });
    }
    Ok(profile.map(UnitTag::CapacityFactor, |_, v| (v * scale).min(1.0))?)
}

/// Hourly generation in kWh for `cfg` in the given project year.
pub fn generation(cf: &HourlyProfile, cfg: &PvConfig, project_year: u32) -> Result<HourlyProfile, PvError> {
    let k = cfg.capacity_kw * cfg.degradation_factor(project_year);
    if !cf.is_complete() {
        return Err(PvError::DegenerateProfile);
    }
    Ok(cf.map(UnitTag::EnergyKwh, |_, v| v * k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::HOURS_PER_YEAR;
    use chrono::NaiveDate;

    fn jan1() -> NaiveDate {
        NaiveDate::from_ymd_opt(2018, 1, 1).unwrap()
    }

    fn cf(values: Vec<f64>) -> HourlyProfile {
        HourlyProfile::from_values(values, UnitTag::CapacityFactor, jan1()).unwrap()
    }

    /// Scale factor whose clipped mean hits `target`, by bisection.
    fn bisect_scale(values: &[f64], target: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        while clipped_mean(values, hi) < target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if clipped_mean(values, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn uniform_profile_scales_linearly() {
        let p = cf(vec![0.10; HOURS_PER_YEAR]);
        let c = calibrate_cf(&p, 0.135).unwrap();
        assert!((c.mean() - 0.135).abs() < 1e-12);
        assert!((c.get(0).unwrap() - 0.135).abs() < 1e-12);
    }

    #[test]
    fn calibrated_profile_is_identity() {
        let p = cf(vec![0.135; HOURS_PER_YEAR]);
        let c = calibrate_cf(&p, 0.135).unwrap();
        for h in [0, 100, 8759] {
            assert!((c.get(h).unwrap() - 0.135).abs() < 1e-12);
        }
    }

    #[test]
    fn clipping_iteration_matches_bisection() {
        // 10% of hours at 0.8, rest at 0.02: scaling to 0.135 clips the peaks
        let values: Vec<f64> = (0..HOURS_PER_YEAR).map(|h| if h % 10 == 0 { 0.8 } else { 0.02 }).collect();
        let p = cf(values.clone());
        let c = calibrate_cf(&p, 0.135).unwrap();
        assert!((c.mean() - 0.135).abs() <= 1e-4);
        assert!(c.raw().iter().flatten().any(|&v| v == 1.0), "expected clipping");
        let s = bisect_scale(&values, 0.135);
        let oracle_mean = clipped_mean(&values, s);
        assert!((c.mean() - oracle_mean).abs() <= 1e-4);
        // the spiky hours saturate; the base hours carry the remainder
        let base_oracle = (0.02 * s).min(1.0);
        assert!((c.get(1).unwrap() - base_oracle).abs() / base_oracle < 2e-3);
    }

    #[test]
    fn unreachable_target_reports_achieved_mean() {
        // only 5% of hours produce anything; mean can never exceed 0.05
        let values: Vec<f64> = (0..HOURS_PER_YEAR).map(|h| if h % 20 == 0 { 0.5 } else { 0.0 }).collect();
        match calibrate_cf(&cf(values), 0.135) {
            Err(PvError::Unreachable { achieved, .. }) => assert!(achieved <= 0.05 + 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let zero = cf(vec![0.0; HOURS_PER_YEAR]);
        assert!(matches!(calibrate_cf(&zero, 0.1), Err(PvError::DegenerateProfile)));
        let p = cf(vec![0.1; HOURS_PER_YEAR]);
        assert!(matches!(calibrate_cf(&p, 1.0), Err(PvError::TargetOutOfRange(_))));
        assert!(matches!(calibrate_cf(&p, 0.0), Err(PvError::TargetOutOfRange(_))));
        assert!(PvConfig::new(11.0, 0.005, 10.0).is_err());
    }

    #[test]
    fn zero_capacity_generates_nothing() {
        let p = cf(vec![0.3; HOURS_PER_YEAR]);
        let g = generation(&p, &PvConfig::new(0.0, 0.005, 10.0).unwrap(), 3).unwrap();
        assert_eq!(g.total(), 0.0);
    }

    #[test]
    fn flat_profile_annual_energy() {
        let p = cf(vec![0.135; HOURS_PER_YEAR]);
        let g = generation(&p, &PvConfig::new(10.0, 0.005, 10.0).unwrap(), 0).unwrap();
        assert!((g.total() - 11_826.0).abs() < 1e-6);
        assert_eq!(g.unit(), UnitTag::EnergyKwh);
    }

    #[test]
    fn degradation_power_law() {
        let cfg = PvConfig::new(1.0, 0.005, 10.0).unwrap();
        assert!((cfg.degradation_factor(10) - 0.995f64.powi(10)).abs() < 1e-15);
        assert!((cfg.degradation_factor(10) - 0.9511).abs() < 1e-4);
    }

    #[test]
    fn roof_density() {
        assert!((max_capacity_from_roof(26_952.0, DEFAULT_ROOF_M2_PER_KW) - 3_251.2).abs() < 0.1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn linear_in_capacity(p in 0.0f64..5.0, year in 0u32..25, level in 0.0f64..1.0) {
                let c = cf((0..HOURS_PER_YEAR).map(|h| level * ((h % 24) as f64 / 23.0)).collect());
                let one = generation(&c, &PvConfig::new(p, 0.005, 10.0).unwrap(), year).unwrap();
                let two = generation(&c, &PvConfig::new(2.0 * p, 0.005, 10.0).unwrap(), year).unwrap();
                for h in (0..HOURS_PER_YEAR).step_by(97) {
                    prop_assert!((two.get(h).unwrap() - 2.0 * one.get(h).unwrap()).abs() <= 1e-12);
                }
                let expected = p * HOURS_PER_YEAR as f64 * c.mean() * 0.995f64.powi(year as i32);
                prop_assert!((one.total() - expected).abs() <= 1e-9 * expected.max(1.0));
                let next = generation(&c, &PvConfig::new(p, 0.005, 10.0).unwrap(), year + 1).unwrap();
                prop_assert!(next.total() <= one.total());
            }
        }
    }
}
