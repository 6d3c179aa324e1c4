//! Electric-vehicle availability for home and community storage.
//!
//! Each vehicle leaves home for a fixed number of one-hour trips per day,
//! drawn uniformly without replacement from the daytime window. A pooled
//! fleet is summarised by a constant daytime availability instead.
//!
//! Vehicle `i` under master seed `s` always uses ChaCha stream `i` of seed
//! `s`, so a vehicle's schedule does not depend on fleet size or on the
//! order in which vehicles are generated.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::{HOURS_PER_DAY, HOURS_PER_YEAR};

pub const DEFAULT_TRIPS_PER_DAY: usize = 3;
pub const DEFAULT_ENERGY_PER_TRIP_KWH: f64 = 1.1;
pub const DEFAULT_KM_PER_TRIP: f64 = 5.8;
pub const DEFAULT_BATTERY_KWH: f64 = 40.0;
pub const DEFAULT_V2H_FRACTION: f64 = 0.5;
pub const DEFAULT_DAYTIME_AVAILABILITY: f64 = 0.75;
pub const DAYTIME_START: usize = 7;
pub const DAYTIME_END: usize = 19;
const WINDOW_LEN: usize = DAYTIME_END - DAYTIME_START;

#[derive(Debug, Error, PartialEq)]
pub enum FleetError {
    #[error("trips_per_day {0} exceeds the {WINDOW_LEN}-hour daytime window")]
    TooManyTrips(usize),
    #[error("fleet has no vehicles")]
    EmptyFleet,
    #[error("invalid fleet configuration: {0}")]
    InvalidConfig(String),
}

/// Trip start hours for each day of one vehicle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripSchedule {
    days: Vec<Vec<u8>>,
    pub trips_per_day: usize,
}

impl TripSchedule {
    pub fn days(&self) -> &[Vec<u8>] {
        &self.days
    }

    pub fn is_away(&self, hour_index: usize) -> bool {
        let (day, hour) = (hour_index / HOURS_PER_DAY, (hour_index % HOURS_PER_DAY) as u8);
        self.days.get(day).is_some_and(|d| d.contains(&hour))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetConfig {
    pub n_ev: usize,
    pub battery_kwh_per_ev: f64,
    pub v2h_fraction: f64,
    pub daytime_availability: f64,
    pub trips_per_day: usize,
    pub energy_per_trip_kwh: f64,
    pub seed: u64,
}

impl FleetConfig {
    pub fn new(n_ev: usize, seed: u64) -> Self {
        Self {
            n_ev,
            battery_kwh_per_ev: DEFAULT_BATTERY_KWH,
            v2h_fraction: DEFAULT_V2H_FRACTION,
            daytime_availability: DEFAULT_DAYTIME_AVAILABILITY,
            trips_per_day: DEFAULT_TRIPS_PER_DAY,
            energy_per_trip_kwh: DEFAULT_ENERGY_PER_TRIP_KWH,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), FleetError> {
        if !(0.0..=1.0).contains(&self.v2h_fraction) {
            return Err(FleetError::InvalidConfig(format!("v2h_fraction {} outside [0, 1]", self.v2h_fraction)));
        }
        if !(0.0..=1.0).contains(&self.daytime_availability) {
            return Err(FleetError::InvalidConfig(format!(
                "daytime_availability {} outside [0, 1]",
                self.daytime_availability
            )));
        }
        if self.trips_per_day > WINDOW_LEN {
            return Err(FleetError::TooManyTrips(self.trips_per_day));
        }
        if !(self.battery_kwh_per_ev > 0.0) || self.energy_per_trip_kwh < 0.0 {
            return Err(FleetError::InvalidConfig("battery and trip energy must be non-negative".into()));
        }
        Ok(())
    }

    /// Total battery capacity of the fleet.
    pub fn nominal_kwh(&self) -> f64 {
        self.n_ev as f64 * self.battery_kwh_per_ev
    }

    /// Capacity usable for home/community supply; the rest is the driving reserve.
    pub fn usable_kwh(&self) -> f64 {
        self.v2h_fraction * self.nominal_kwh()
    }

    pub fn daily_driving_kwh(&self) -> f64 {
        self.n_ev as f64 * self.trips_per_day as f64 * self.energy_per_trip_kwh
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FleetMode {
    Individual,
    Pooled,
}

/// Share of fleet V2H capacity reachable in each hour of the year.
#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilityProfile(pub Vec<f64>);

impl AvailabilityProfile {
    pub fn always(hours: usize) -> Self {
        Self(vec![1.0; hours])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Hour-by-hour mean of several profiles (the share of vehicles at home).
    pub fn mean_of(profiles: &[AvailabilityProfile]) -> Self {
        let n = profiles.len().max(1) as f64;
        let len = profiles.first().map_or(0, |p| p.0.len());
        Self((0..len).map(|h| profiles.iter().map(|p| p.0[h]).sum::<f64>() / n).collect())
    }
}

fn vehicle_rng(seed: u64, vehicle_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(vehicle_id);
    rng
}

fn draw_days(rng: &mut ChaCha8Rng, n_days: usize, trips_per_day: usize) -> Vec<Vec<u8>> {
    (0..n_days)
        .map(|_| {
            let mut hours: Vec<u8> = sample(rng, WINDOW_LEN, trips_per_day)
                .into_iter()
                .map(|i| (DAYTIME_START + i) as u8)
                .collect();
            hours.sort_unstable();
            hours
        })
        .collect()
}

/// Trip schedule of one vehicle under a master seed.
pub fn sample_vehicle_trips(
    seed: u64,
    vehicle_id: u64,
    n_days: usize,
    trips_per_day: usize,
) -> Result<TripSchedule, FleetError> {
    if trips_per_day > WINDOW_LEN {
        return Err(FleetError::TooManyTrips(trips_per_day));
    }
    let mut rng = vehicle_rng(seed, vehicle_id);
    Ok(TripSchedule { days: draw_days(&mut rng, n_days, trips_per_day), trips_per_day })
}

/// Trip schedule for a single vehicle (stream 0 of `seed`).
pub fn sample_trips(seed: u64, n_days: usize, trips_per_day: usize) -> Result<TripSchedule, FleetError> {
    sample_vehicle_trips(seed, 0, n_days, trips_per_day)
}

fn individual_profile(schedule: &TripSchedule, hours: usize) -> AvailabilityProfile {
    AvailabilityProfile((0..hours).map(|h| if schedule.is_away(h) { 0.0 } else { 1.0 }).collect())
}

pub fn is_daytime(hour_index: usize) -> bool {
    (DAYTIME_START..DAYTIME_END).contains(&(hour_index % HOURS_PER_DAY))
}

/// One-year schedules for every vehicle in the fleet.
pub fn fleet_schedules(fleet: &FleetConfig) -> Result<Vec<TripSchedule>, FleetError> {
    fleet.validate()?;
    (0..fleet.n_ev as u64)
        .map(|v| sample_vehicle_trips(fleet.seed, v, HOURS_PER_YEAR / HOURS_PER_DAY, fleet.trips_per_day))
        .collect()
}

/// Availability over one year. Individual mode returns one profile per
/// vehicle (0 during its trips, 1 otherwise); pooled mode returns a single
/// profile at `daytime_availability` inside the daytime window and 1 outside.
pub fn availability_profile(fleet: &FleetConfig, mode: FleetMode) -> Result<Vec<AvailabilityProfile>, FleetError> {
    fleet.validate()?;
    if fleet.n_ev == 0 {
        return Err(FleetError::EmptyFleet);
    }
    match mode {
        FleetMode::Individual => Ok(fleet_schedules(fleet)?
            .iter()
            .map(|s| individual_profile(s, HOURS_PER_YEAR))
            .collect()),
        FleetMode::Pooled => Ok(vec![pooled_profile(fleet.daytime_availability)]),
    }
}

pub fn pooled_profile(daytime_availability: f64) -> AvailabilityProfile {
    AvailabilityProfile(
        (0..HOURS_PER_YEAR)
            .map(|h| if is_daytime(h) { daytime_availability } else { 1.0 })
            .collect(),
    )
}

/// Hourly energy taken from vehicle batteries for driving over one year.
///
/// In individual mode each trip hour of each schedule draws
/// `energy_per_trip_kwh`. In pooled mode the fleet's daily driving energy
/// is spread evenly across the daytime window.
pub fn driving_draw(fleet: &FleetConfig, schedules: Option<&[TripSchedule]>, mode: FleetMode) -> Vec<f64> {
    match mode {
        FleetMode::Individual => {
            let mut draw = vec![0.0; HOURS_PER_YEAR];
            for s in schedules.unwrap_or_default() {
                for (h, d) in draw.iter_mut().enumerate() {
                    if s.is_away(h) {
                        *d += fleet.energy_per_trip_kwh;
                    }
                }
            }
            draw
        }
        FleetMode::Pooled => {
            let per_hour = fleet.daily_driving_kwh() / WINDOW_LEN as f64;
            (0..HOURS_PER_YEAR).map(|h| if is_daytime(h) { per_hour } else { 0.0 }).collect()
        }
    }
}

/// Annual distance implied by the trip model.
pub fn annual_driving_km(trips_per_day: usize, km_per_trip: f64) -> f64 {
    trips_per_day as f64 * km_per_trip * 365.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FleetExperimentRow {
    pub n_ev: usize,
    pub mean_daytime_avail: f64,
    pub mean_daily_min_avail: f64,
}

/// For each fleet size, the share of vehicles at home during daytime hours:
/// its mean over all daytime hours and the mean over days of its daily
/// minimum. Vehicle `i` keeps the same schedule across fleet sizes.
pub fn min_availability_experiment(
    n_ev_range: &[usize],
    n_days: usize,
    trips_per_day: usize,
    seed: u64,
) -> Result<Vec<FleetExperimentRow>, FleetError> {
    if trips_per_day > WINDOW_LEN {
        return Err(FleetError::TooManyTrips(trips_per_day));
    }
    let max_n = n_ev_range.iter().copied().max().unwrap_or(0);
    let schedules: Vec<TripSchedule> = (0..max_n as u64)
        .map(|v| sample_vehicle_trips(seed, v, n_days, trips_per_day))
        .collect::<Result<_, _>>()?;

    n_ev_range
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(FleetError::EmptyFleet);
            }
            let mut away = vec![[0u32; WINDOW_LEN]; n_days];
            for s in &schedules[..n] {
                for (day, hours) in s.days().iter().enumerate() {
                    for &h in hours {
                        away[day][h as usize - DAYTIME_START] += 1;
                    }
                }
            }
            let nf = n as f64;
            let (mut sum_avail, mut sum_min) = (0.0, 0.0);
            for day in &away {
                let mut min = 1.0f64;
                for &a in day {
                    let home = (nf - a as f64) / nf;
                    sum_avail += home;
                    min = min.min(home);
                }
                sum_min += min;
            }
            Ok(FleetExperimentRow {
                n_ev: n,
                mean_daytime_avail: sum_avail / (n_days * WINDOW_LEN) as f64,
                mean_daily_min_avail: sum_min / n_days as f64,
            })
        })
        .collect()
}
