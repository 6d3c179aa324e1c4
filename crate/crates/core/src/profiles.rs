//! Hourly time series: ingestion, gap repair, aggregation and summary statistics.
//!
//! Every profile covers one non-leap calendar year at hourly resolution
//! (8760 values). Index 0 is 00:00 on 1 January of the profile's year.
//! Timestamps are local standard time; no DST shifts are applied.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HOURS_PER_DAY: usize = 24;
pub const DAYS_PER_YEAR: usize = 365;
pub const HOURS_PER_YEAR: usize = HOURS_PER_DAY * DAYS_PER_YEAR;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("line {line}: malformed timestamp `{value}`")]
    MalformedTimestamp { line: u64, value: String },
    #[error("line {line}: negative energy {value} for house `{house}`")]
    NegativeEnergy { line: u64, house: String, value: f64 },
    #[error("line {line}: capacity factor {value} outside [0, 1]")]
    CapacityFactorOutOfRange { line: u64, value: f64 },
    #[error("line {line}: duplicate row for house `{house}` at {timestamp}")]
    DuplicateKey { line: u64, house: String, timestamp: String },
    #[error("wrong year length: {0}")]
    WrongYearLength(String),
    #[error("value {value} at hour {hour} violates the {unit} range")]
    OutOfRange { hour: usize, value: f64, unit: UnitTag },
    #[error("unrepairable profile: no present values")]
    Unrepairable,
    #[error("profile has {0} missing values; repair gaps first")]
    HasGaps(usize),
    #[error("cannot aggregate: {0}")]
    Mismatch(String),
    #[error("statistics out of reach: {0}")]
    StatsUnreachable(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Physical meaning of the values held in a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitTag {
    /// Energy per hour in kWh (numerically equal to mean kW over the hour).
    EnergyKwh,
    /// PV output per unit of nameplate capacity, in [0, 1].
    CapacityFactor,
    /// Dimensionless share, in [0, 1].
    Fraction,
}

impl UnitTag {
    fn upper_bound(self) -> Option<f64> {
        match self {
            UnitTag::EnergyKwh => None,
            UnitTag::CapacityFactor | UnitTag::Fraction => Some(1.0),
        }
    }
}

impl fmt::Display for UnitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnitTag::EnergyKwh => "energy_kwh",
            UnitTag::CapacityFactor => "capacity_factor",
            UnitTag::Fraction => "fraction",
        })
    }
}

/// One year of hourly values, possibly with missing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyProfile {
    values: Vec<Option<f64>>,
    unit: UnitTag,
    start_date: NaiveDate,
}

/// Totals and extrema of a profile. Missing values are excluded from the
/// extrema and counted in `n_missing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileStats {
    pub annual_total_kwh: f64,
    pub hourly_max_kw: f64,
    pub hourly_min_kw: f64,
    pub n_missing: usize,
}

fn check_year_start(start_date: NaiveDate) -> Result<(), ProfileError> {
    if start_date.ordinal() != 1 {
        return Err(ProfileError::WrongYearLength(format!(
            "profile must start on 1 January, got {start_date}"
        )));
    }
    if is_leap_year(start_date.year()) {
        return Err(ProfileError::WrongYearLength(format!(
            "{} is a leap year; only 8760-hour years are supported",
            start_date.year()
        )));
    }
    Ok(())
}

fn is_leap_year(year: i32) -> bool {
    NaiveDate::from_ymd_opt(year, 2, 29).is_some()
}

impl HourlyProfile {
    /// Builds a profile that may contain gaps.
    pub fn with_gaps(
        values: Vec<Option<f64>>,
        unit: UnitTag,
        start_date: NaiveDate,
    ) -> Result<Self, ProfileError> {
        if values.len() != HOURS_PER_YEAR {
            return Err(ProfileError::WrongYearLength(format!(
                "expected {HOURS_PER_YEAR} hours, got {}",
                values.len()
            )));
        }
        check_year_start(start_date)?;
        for (hour, v) in values.iter().enumerate() {
            if let Some(v) = *v {
                let above = unit.upper_bound().is_some_and(|ub| v > ub);
                if !v.is_finite() || v < 0.0 || above {
                    return Err(ProfileError::OutOfRange { hour, value: v, unit });
                }
            }
        }
        Ok(Self { values, unit, start_date })
    }

    /// Builds a gap-free profile.
    pub fn from_values(
        values: Vec<f64>,
        unit: UnitTag,
        start_date: NaiveDate,
    ) -> Result<Self, ProfileError> {
        Self::with_gaps(values.into_iter().map(Some).collect(), unit, start_date)
    }

    /// A gap-free profile with the same value every hour.
    pub fn constant(value: f64, unit: UnitTag, start_date: NaiveDate) -> Result<Self, ProfileError> {
        Self::from_values(vec![value; HOURS_PER_YEAR], unit, start_date)
    }

    pub fn unit(&self) -> UnitTag {
        self.unit
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, hour: usize) -> Option<f64> {
        self.values.get(hour).copied().flatten()
    }

    pub fn raw(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn n_missing(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Values of a gap-free profile.
    pub fn dense(&self) -> Result<Vec<f64>, ProfileError> {
        let missing = self.n_missing();
        if missing > 0 {
            return Err(ProfileError::HasGaps(missing));
        }
        Ok(self.values.iter().map(|v| v.unwrap_or(0.0)).collect())
    }

    /// Sum of present values.
    pub fn total(&self) -> f64 {
        self.values.iter().flatten().sum()
    }

    /// Mean of present values (0 when nothing is present).
    pub fn mean(&self) -> f64 {
        let present = self.values.len() - self.n_missing();
        if present == 0 {
            0.0
        } else {
            self.total() / present as f64
        }
    }

    /// Applies `f` to every present value, re-validating the result.
    pub fn map(&self, unit: UnitTag, f: impl Fn(usize, f64) -> f64) -> Result<Self, ProfileError> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(h, v)| v.map(|v| f(h, v)))
            .collect();
        Self::with_gaps(values, unit, self.start_date)
    }
}

#[derive(Debug, Deserialize)]
struct DemandRow {
    house_id: String,
    timestamp: String,
    kwh: f64,
}

#[derive(Debug, Deserialize)]
struct CfRow {
    timestamp: String,
    cf: f64,
}

fn parse_timestamp(line: u64, raw: &str) -> Result<NaiveDateTime, ProfileError> {
    let malformed = || ProfileError::MalformedTimestamp { line, value: raw.to_string() };
    let ts = NaiveDateTime::parse_from_str(raw, TIMESTAMP_FORMAT).map_err(|_| malformed())?;
    if ts.minute() != 0 {
        return Err(malformed());
    }
    Ok(ts)
}

fn hour_index(ts: NaiveDateTime) -> usize {
    (ts.ordinal0() as usize) * HOURS_PER_DAY + ts.hour() as usize
}

/// Tracks the single calendar year that all rows of a file must share.
struct YearGuard(Option<i32>);

impl YearGuard {
    fn check(&mut self, line: u64, ts: NaiveDateTime) -> Result<(), ProfileError> {
        let year = ts.year();
        match self.0 {
            None => {
                if is_leap_year(year) {
                    return Err(ProfileError::WrongYearLength(format!(
                        "line {line}: {year} is a leap year; only 8760-hour years are supported"
                    )));
                }
                self.0 = Some(year);
            }
            Some(y) if y != year => {
                return Err(ProfileError::WrongYearLength(format!(
                    "line {line}: rows span years {y} and {year}"
                )));
            }
            Some(_) => {}
        }
        Ok(())
    }

    fn start_date(&self) -> Result<NaiveDate, ProfileError> {
        let year = self
            .0
            .ok_or_else(|| ProfileError::WrongYearLength("file has no data rows".into()))?;
        Ok(NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year"))
    }
}

/// Reads demand rows (`house_id,timestamp,kwh`) into one profile per house.
/// Hours without a row become missing values.
pub fn read_demand_csv<R: Read>(reader: R) -> Result<BTreeMap<String, HourlyProfile>, ProfileError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut houses: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    let mut year = YearGuard(None);
    for (i, record) in rdr.deserialize::<DemandRow>().enumerate() {
        let row = record?;
        // header is line 1
        let line = i as u64 + 2;
        let ts = parse_timestamp(line, &row.timestamp)?;
        year.check(line, ts)?;
        if !row.kwh.is_finite() || row.kwh < 0.0 {
            return Err(ProfileError::NegativeEnergy { line, house: row.house_id, value: row.kwh });
        }
        let slot = houses
            .entry(row.house_id.clone())
            .or_insert_with(|| vec![None; HOURS_PER_YEAR]);
        let idx = hour_index(ts);
        if slot[idx].is_some() {
            return Err(ProfileError::DuplicateKey {
                line,
                house: row.house_id,
                timestamp: row.timestamp,
            });
        }
        slot[idx] = Some(row.kwh);
    }
    let start = year.start_date()?;
    houses
        .into_iter()
        .map(|(id, values)| Ok((id, HourlyProfile::with_gaps(values, UnitTag::EnergyKwh, start)?)))
        .collect()
}

pub fn load_demand_csv(path: &Path) -> Result<BTreeMap<String, HourlyProfile>, ProfileError> {
    read_demand_csv(std::fs::File::open(path)?)
}

/// Reads a capacity-factor file (`timestamp,cf`).
pub fn read_cf_csv<R: Read>(reader: R) -> Result<HourlyProfile, ProfileError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut values = vec![None; HOURS_PER_YEAR];
    let mut year = YearGuard(None);
    for (i, record) in rdr.deserialize::<CfRow>().enumerate() {
        let row = record?;
        let line = i as u64 + 2;
        let ts = parse_timestamp(line, &row.timestamp)?;
        year.check(line, ts)?;
        if !(0.0..=1.0).contains(&row.cf) {
            return Err(ProfileError::CapacityFactorOutOfRange { line, value: row.cf });
        }
        let idx = hour_index(ts);
        if values[idx].is_some() {
            return Err(ProfileError::DuplicateKey {
                line,
                house: String::new(),
                timestamp: row.timestamp,
            });
        }
        values[idx] = Some(row.cf);
    }
    HourlyProfile::with_gaps(values, UnitTag::CapacityFactor, year.start_date()?)
}

pub fn load_cf_csv(path: &Path) -> Result<HourlyProfile, ProfileError> {
    read_cf_csv(std::fs::File::open(path)?)
}

fn timestamp_at(start: NaiveDate, hour: usize) -> String {
    let ts = start.and_hms_opt(0, 0, 0).expect("midnight")
        + chrono::Duration::hours(hour as i64);
    ts.format(TIMESTAMP_FORMAT).to_string()
}

/// Writes profiles in the demand schema; missing hours are omitted.
pub fn write_demand_csv<W: Write>(
    writer: W,
    profiles: &BTreeMap<String, HourlyProfile>,
) -> Result<(), ProfileError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(["house_id", "timestamp", "kwh"])?;
    for (id, profile) in profiles {
        for (hour, v) in profile.raw().iter().enumerate() {
            if let Some(v) = v {
                w.write_record([id.as_str(), &timestamp_at(profile.start_date, hour), &v.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_cf_csv<W: Write>(writer: W, profile: &HourlyProfile) -> Result<(), ProfileError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(["timestamp", "cf"])?;
    for (hour, v) in profile.raw().iter().enumerate() {
        if let Some(v) = v {
            w.write_record([timestamp_at(profile.start_date, hour), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Replaces each missing value at (day d, hour h) with the mean of the
/// present values at hour h on days d-1..=d+1. If none are present the
/// window widens by one day on each side until something is found. Windows
/// are clamped to the year, so day 1 looks at days 1 and 2 only.
///
/// Only values present in the input are used as donors; fills never feed
/// other fills.
pub fn fill_gaps(profile: &HourlyProfile) -> Result<HourlyProfile, ProfileError> {
    if profile.is_complete() {
        return Ok(profile.clone());
    }
    if profile.values.iter().all(Option::is_none) {
        return Err(ProfileError::Unrepairable);
    }
    let src = &profile.values;
    let mut out = src.clone();
    for (idx, slot) in out.iter_mut().enumerate() {
        if slot.is_some() {
            continue;
        }
        let (day, hour) = (idx / HOURS_PER_DAY, idx % HOURS_PER_DAY);
        let mut radius = 1;
        loop {
            let lo = day.saturating_sub(radius);
            let hi = (day + radius).min(DAYS_PER_YEAR - 1);
            let (sum, n) = (lo..=hi)
                .filter_map(|d| src[d * HOURS_PER_DAY + hour])
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            if n > 0 {
                *slot = Some(sum / n as f64);
                break;
            }
            if lo == 0 && hi == DAYS_PER_YEAR - 1 {
                // this hour of day is missing on every day; use the profile mean
                *slot = Some(profile.mean());
                break;
            }
            radius += 1;
        }
    }
    Ok(HourlyProfile { values: out, unit: profile.unit, start_date: profile.start_date })
}

/// Element-wise sum of gap-free energy profiles.
pub fn aggregate(profiles: &[HourlyProfile]) -> Result<HourlyProfile, ProfileError> {
    let first = profiles
        .first()
        .ok_or_else(|| ProfileError::Mismatch("no profiles given".into()))?;
    let mut sum = vec![0.0; first.len()];
    for p in profiles {
        if p.unit != UnitTag::EnergyKwh {
            return Err(ProfileError::Mismatch(format!("unit tag {} is not energy_kwh", p.unit)));
        }
        if p.len() != first.len() {
            return Err(ProfileError::Mismatch(format!("lengths {} and {}", first.len(), p.len())));
        }
        if p.start_date != first.start_date {
            return Err(ProfileError::Mismatch(format!(
                "start dates {} and {}",
                first.start_date, p.start_date
            )));
        }
        for (acc, v) in sum.iter_mut().zip(p.dense()?) {
            *acc += v;
        }
    }
    HourlyProfile::from_values(sum, UnitTag::EnergyKwh, first.start_date)
}

pub fn profile_stats(profile: &HourlyProfile) -> ProfileStats {
    let present = profile.values.iter().flatten().copied();
    let (max, min) = present.fold((f64::NEG_INFINITY, f64::INFINITY), |(mx, mn), v| {
        (mx.max(v), mn.min(v))
    });
    let n_missing = profile.n_missing();
    let all_missing = n_missing == profile.len();
    ProfileStats {
        annual_total_kwh: profile.total(),
        hourly_max_kw: if all_missing { 0.0 } else { max },
        hourly_min_kw: if all_missing { 0.0 } else { min },
        n_missing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jan1() -> NaiveDate {
        NaiveDate::from_ymd_opt(2018, 1, 1).unwrap()
    }

    fn idx(day1: usize, hour: usize) -> usize {
        (day1 - 1) * HOURS_PER_DAY + hour
    }

    fn demand_csv(houses: &[&str], skip: &[(&str, usize)]) -> String {
        let mut s = String::from("house_id,timestamp,kwh\n");
        for h in houses {
            for i in 0..HOURS_PER_YEAR {
                if skip.contains(&(*h, i)) {
                    continue;
                }
                s.push_str(&format!("{h},{},0.5\n", timestamp_at(jan1(), i)));
            }
        }
        s
    }

    #[test]
    fn loads_complete_two_house_file() {
        let csv = demand_csv(&["A", "B"], &[]);
        let map = read_demand_csv(csv.as_bytes()).unwrap();
        assert_eq!(map.len(), 2);
        for p in map.values() {
            assert_eq!(profile_stats(p).n_missing, 0);
        }
    }

    #[test]
    fn absent_row_becomes_missing() {
        let csv = demand_csv(&["A"], &[("A", 100)]);
        let map = read_demand_csv(csv.as_bytes()).unwrap();
        let a = &map["A"];
        assert_eq!(a.get(100), None);
        assert_eq!(profile_stats(a).n_missing, 1);
    }

    #[test]
    fn negative_energy_rejected() {
        let csv = "house_id,timestamp,kwh\nA,2018-01-01T00:00,1.0\nA,2018-01-01T01:00,-0.5\n";
        let err = read_demand_csv(csv.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("negative energy"), "{err}");
    }

    #[test]
    fn duplicate_row_rejected() {
        let csv = "house_id,timestamp,kwh\nA,2018-01-01T00:00,1.0\nA,2018-01-01T00:00,2.0\n";
        assert!(matches!(
            read_demand_csv(csv.as_bytes()),
            Err(ProfileError::DuplicateKey { .. })
        ));
    }

    #[test]
    fn malformed_timestamp_rejected() {
        for bad in ["2018-01-01 00:00", "2018-13-01T00:00", "2018-01-01T00:30", "yesterday"] {
            let csv = format!("house_id,timestamp,kwh\nA,{bad},1.0\n");
            assert!(
                matches!(read_demand_csv(csv.as_bytes()), Err(ProfileError::MalformedTimestamp { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn leap_year_and_mixed_years_rejected() {
        let leap = "house_id,timestamp,kwh\nA,2020-01-01T00:00,1.0\n";
        assert!(matches!(read_demand_csv(leap.as_bytes()), Err(ProfileError::WrongYearLength(_))));
        let mixed = "house_id,timestamp,kwh\nA,2018-12-31T23:00,1.0\nA,2019-01-01T00:00,1.0\n";
        assert!(matches!(read_demand_csv(mixed.as_bytes()), Err(ProfileError::WrongYearLength(_))));
    }

    #[test]
    fn cf_file_range_checked() {
        let csv = "timestamp,cf\n2018-06-01T12:00,1.2\n";
        assert!(matches!(
            read_cf_csv(csv.as_bytes()),
            Err(ProfileError::CapacityFactorOutOfRange { .. })
        ));
    }

    #[test]
    fn fill_without_gaps_is_identity() {
        let p = HourlyProfile::constant(0.7, UnitTag::EnergyKwh, jan1()).unwrap();
        assert_eq!(fill_gaps(&p).unwrap(), p);
    }

    #[test]
    fn fill_uses_adjacent_days_same_hour() {
        let mut v = vec![Some(1.0); HOURS_PER_YEAR];
        v[idx(9, 2)] = Some(2.0);
        v[idx(10, 2)] = None;
        v[idx(11, 2)] = Some(4.0);
        let p = HourlyProfile::with_gaps(v, UnitTag::EnergyKwh, jan1()).unwrap();
        let f = fill_gaps(&p).unwrap();
        assert_eq!(f.get(idx(10, 2)), Some(3.0));
        assert_eq!(f.n_missing(), 0);
    }

    #[test]
    fn fill_clamps_at_first_day() {
        // hand trace: day 1 hour 5 missing; window {day 1, day 2}; only day 2 present -> 6.0
        let mut v = vec![Some(1.0); HOURS_PER_YEAR];
        v[idx(1, 5)] = None;
        v[idx(2, 5)] = Some(6.0);
        let p = HourlyProfile::with_gaps(v, UnitTag::EnergyKwh, jan1()).unwrap();
        assert_eq!(fill_gaps(&p).unwrap().get(idx(1, 5)), Some(6.0));
    }

    #[test]
    fn fill_widens_when_window_empty() {
        let mut v = vec![Some(1.0); HOURS_PER_YEAR];
        for d in 8..=12 {
            v[idx(d, 3)] = None;
        }
        v[idx(7, 3)] = Some(5.0);
        v[idx(13, 3)] = Some(9.0);
        let p = HourlyProfile::with_gaps(v, UnitTag::EnergyKwh, jan1()).unwrap();
        let f = fill_gaps(&p).unwrap();
        // day 10 needs radius 3 -> days 7..13 -> mean(5, 9)
        assert_eq!(f.get(idx(10, 3)), Some(7.0));
        // day 8 finds day 7 at radius 1
        assert_eq!(f.get(idx(8, 3)), Some(5.0));
        // day 12 finds day 13 at radius 1
        assert_eq!(f.get(idx(12, 3)), Some(9.0));
        // day 11 needs radius 2 -> days 9..13 -> only day 13
        assert_eq!(f.get(idx(11, 3)), Some(9.0));
    }

    #[test]
    fn fill_rejects_empty_profile() {
        let p = HourlyProfile::with_gaps(vec![None; HOURS_PER_YEAR], UnitTag::EnergyKwh, jan1()).unwrap();
        assert!(matches!(fill_gaps(&p), Err(ProfileError::Unrepairable)));
    }

    #[test]
    fn aggregate_sums_elementwise() {
        let a = HourlyProfile::constant(1.0, UnitTag::EnergyKwh, jan1()).unwrap();
        let b = HourlyProfile::constant(2.0, UnitTag::EnergyKwh, jan1()).unwrap();
        let s = aggregate(&[a.clone(), b]).unwrap();
        assert!(s.dense().unwrap().iter().all(|&v| v == 3.0));
        assert_eq!(aggregate(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn aggregate_rejects_mismatch() {
        let a = HourlyProfile::constant(1.0, UnitTag::EnergyKwh, jan1()).unwrap();
        let cf = HourlyProfile::constant(0.1, UnitTag::CapacityFactor, jan1()).unwrap();
        assert!(matches!(aggregate(&[a.clone(), cf]), Err(ProfileError::Mismatch(_))));
        let other = HourlyProfile::constant(1.0, UnitTag::EnergyKwh, NaiveDate::from_ymd_opt(2019, 1, 1).unwrap()).unwrap();
        assert!(matches!(aggregate(&[a, other]), Err(ProfileError::Mismatch(_))));
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn stats_on_zero_and_gappy_profiles() {
        let z = HourlyProfile::constant(0.0, UnitTag::EnergyKwh, jan1()).unwrap();
        let s = profile_stats(&z);
        assert_eq!((s.annual_total_kwh, s.hourly_max_kw, s.hourly_min_kw), (0.0, 0.0, 0.0));
        let mut v = vec![Some(1.0); HOURS_PER_YEAR];
        v[3] = None;
        v[300] = None;
        v[8000] = None;
        let g = HourlyProfile::with_gaps(v, UnitTag::EnergyKwh, jan1()).unwrap();
        assert_eq!(profile_stats(&g).n_missing, 3);
    }

    #[test]
    fn csv_round_trip_preserves_gaps() {
        let mut v: Vec<Option<f64>> = (0..HOURS_PER_YEAR).map(|i| Some((i % 7) as f64 * 0.25)).collect();
        v[42] = None;
        let p = HourlyProfile::with_gaps(v, UnitTag::EnergyKwh, jan1()).unwrap();
        let map: BTreeMap<_, _> = [("h1".to_string(), p.clone())].into();
        let mut buf = Vec::new();
        write_demand_csv(&mut buf, &map).unwrap();
        let back = read_demand_csv(buf.as_slice()).unwrap();
        assert_eq!(back["h1"], p);
    }
}
