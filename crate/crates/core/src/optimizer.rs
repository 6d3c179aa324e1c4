//! Capacity sweeps, start-year trajectories and individual-vs-aggregated
//! comparisons.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{
    simulate_project_hours, Degradation, DispatchError, EnergyTotals, HourRecord, ProjectParams, StorageConfig, StorageKind,
    Tariff, DEFAULT_EFFICIENCY, DEFAULT_REPLACEMENT_THRESHOLD,
};
use crate::ev_fleet::{
    driving_draw, pooled_profile, sample_vehicle_trips, AvailabilityProfile, FleetConfig, FleetError,
    FleetMode, TripSchedule, DEFAULT_BATTERY_KWH, DEFAULT_DAYTIME_AVAILABILITY, DEFAULT_ENERGY_PER_TRIP_KWH,
    DEFAULT_TRIPS_PER_DAY, DEFAULT_V2H_FRACTION,
};
use crate::finance::{
    annual_electricity_cost, irr, npv_electricity, npv_gasoline, spb, system_cost, FinanceError, FinanceParams,
    FinancialSummary, StorageInvestment, TechnologyCostSchedule, TransportParams,
};
use crate::metrics::{co2, cost_saving, energy_indices, EmissionFactors, MetricsRow};
use crate::profiles::{DAYS_PER_YEAR, HOURS_PER_YEAR};
use crate::pv_model::{PvConfig, PvError, DEFAULT_PV_DEGRADATION};

/// Two NPVs closer than this are treated as equal when picking the optimum.
pub const NPV_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("scenario data: {0}")]
    Data(String),
    #[error("simulation failed at p={p_kw} kW, b={b_kwh} kWh: {source}")]
    Simulation { p_kw: f64, b_kwh: f64, source: DispatchError },
    #[error(transparent)]
    Finance(#[from] FinanceError),
    #[error(transparent)]
    Fleet(#[from] FleetError),
    #[error(transparent)]
    Pv(#[from] PvError),
}

fn config_err(path: &str, message: impl Into<String>) -> OptimizerError {
    OptimizerError::Config { path: path.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technology {
    PvPlusBattery,
    PvPlusEv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisMode {
    Individual,
    Aggregated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    Residential,
    Commercial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source", deny_unknown_fields)]
pub enum DemandSource {
    Synthetic { kind: FixtureKind },
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source", deny_unknown_fields)]
pub enum CfSource {
    Synthetic,
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistrictConfig {
    pub n_houses: usize,
    #[serde(default = "default_max_pv")]
    pub max_pv_kw_per_house: f64,
    #[serde(default = "default_demand")]
    pub demand: DemandSource,
}

fn default_max_pv() -> f64 {
    10.0
}

fn default_demand() -> DemandSource {
    DemandSource::Synthetic { kind: FixtureKind::Residential }
}

/// Per-house candidate grid; aggregated runs scale it by the house count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub pv_step_kw: f64,
    pub pv_max_kw: f64,
    pub battery_step_kwh: f64,
    pub battery_max_kwh: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self { pv_step_kw: 1.0, pv_max_kw: 10.0, battery_step_kwh: 2.0, battery_max_kwh: 20.0 }
    }
}

fn grid_values(step: f64, max: f64) -> Vec<f64> {
    if max <= 0.0 {
        return vec![0.0];
    }
    let n = (max / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    if max - v[n] > 1e-9 * max {
        v.push(max);
    }
    v
}

impl SweepGrid {
    pub fn pv_values(&self) -> Vec<f64> {
        grid_values(self.pv_step_kw, self.pv_max_kw)
    }

    pub fn battery_values(&self) -> Vec<f64> {
        grid_values(self.battery_step_kwh, self.battery_max_kwh)
    }
}

/// How the aggregated fleet's availability and driving draw are modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PooledAvailability {
    /// Fixed daytime share, driving spread evenly across the daytime window.
    DaytimeFraction,
    /// Hour-by-hour share of vehicles at home, from the sampled trips.
    FleetMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FleetSettings {
    pub ev_per_house: usize,
    pub battery_kwh_per_ev: f64,
    pub v2h_fraction: f64,
    pub daytime_availability: f64,
    pub trips_per_day: usize,
    pub energy_per_trip_kwh: f64,
    pub km_per_trip: f64,
    pub driving: bool,
    pub pooled_availability: PooledAvailability,
}

impl Default for FleetSettings {
    fn default() -> Self {
        Self {
            ev_per_house: 1,
            battery_kwh_per_ev: DEFAULT_BATTERY_KWH,
            v2h_fraction: DEFAULT_V2H_FRACTION,
            daytime_availability: DEFAULT_DAYTIME_AVAILABILITY,
            trips_per_day: DEFAULT_TRIPS_PER_DAY,
            energy_per_trip_kwh: DEFAULT_ENERGY_PER_TRIP_KWH,
            km_per_trip: crate::ev_fleet::DEFAULT_KM_PER_TRIP,
            driving: true,
            pooled_availability: PooledAvailability::DaytimeFraction,
        }
    }
}

impl FleetSettings {
    pub fn fleet_config(&self, n_houses: usize, seed: u64) -> FleetConfig {
        FleetConfig {
            n_ev: self.ev_per_house * n_houses,
            battery_kwh_per_ev: self.battery_kwh_per_ev,
            v2h_fraction: self.v2h_fraction,
            daytime_availability: self.daytime_availability,
            trips_per_day: self.trips_per_day,
            energy_per_trip_kwh: self.energy_per_trip_kwh,
            seed,
        }
    }
}

/// Flat tariff. The export price only applies when the scenario has FIT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TariffConfig {
    pub import_price: f64,
    pub export_price: f64,
}

impl Default for TariffConfig {
    fn default() -> Self {
        Self { import_price: 0.22, export_price: 0.09 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PvSettings {
    pub cf: CfSource,
    /// Annual mean capacity factor the profile is scaled to; 0 keeps it as read.
    pub target_cf: f64,
    pub annual_degradation: f64,
}

impl Default for PvSettings {
    fn default() -> Self {
        Self { cf: CfSource::Synthetic, target_cf: 0.135, annual_degradation: DEFAULT_PV_DEGRADATION }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StorageSettings {
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    /// Per house; scaled by the house count in aggregated runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_limit_kw: Option<f64>,
    pub degradation: Degradation,
    pub replacement_threshold: f64,
}

impl Default for StorageSettings {
    fn default() -> Self {
        Self {
            charge_efficiency: DEFAULT_EFFICIENCY,
            discharge_efficiency: DEFAULT_EFFICIENCY,
            power_limit_kw: None,
            degradation: Degradation::default(),
            replacement_threshold: DEFAULT_REPLACEMENT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub district: DistrictConfig,
    pub technology: Technology,
    pub fit: bool,
    pub mode: AnalysisMode,
    #[serde(default)]
    pub sweep: SweepGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fleet: Option<FleetSettings>,
    #[serde(default)]
    pub tariff: TariffConfig,
    #[serde(default)]
    pub costs: TechnologyCostSchedule,
    #[serde(default)]
    pub finance: FinanceParams,
    #[serde(default)]
    pub emissions: EmissionFactors,
    #[serde(default)]
    pub transport: TransportParams,
    #[serde(default)]
    pub pv: PvSettings,
    #[serde(default)]
    pub storage: StorageSettings,
    #[serde(default)]
    pub seed: u64,
}

fn check(ok: bool, path: &str, message: impl Into<String>) -> Result<(), OptimizerError> {
    if ok {
        Ok(())
    } else {
        Err(config_err(path, message))
    }
}

fn check_fraction(v: f64, path: &str) -> Result<(), OptimizerError> {
    check((0.0..=1.0).contains(&v), path, format!("{v} must lie in [0, 1]"))
}

fn check_positive(v: f64, path: &str) -> Result<(), OptimizerError> {
    check(v > 0.0 && v.is_finite(), path, format!("{v} must be positive"))
}

fn check_non_negative(v: f64, path: &str) -> Result<(), OptimizerError> {
    check(v >= 0.0 && v.is_finite(), path, format!("{v} must be non-negative"))
}

impl ScenarioConfig {
    /// A residential district with defaults everywhere else.
    pub fn residential(n_houses: usize, technology: Technology, fit: bool, mode: AnalysisMode) -> Self {
        Self {
            name: String::new(),
            district: DistrictConfig { n_houses, max_pv_kw_per_house: default_max_pv(), demand: default_demand() },
            technology,
            fit,
            mode,
            sweep: SweepGrid::default(),
            fleet: (technology == Technology::PvPlusEv).then(FleetSettings::default),
            tariff: TariffConfig::default(),
            costs: TechnologyCostSchedule::default(),
            finance: FinanceParams::default(),
            emissions: EmissionFactors::default(),
            transport: TransportParams::default(),
            pv: PvSettings::default(),
            storage: StorageSettings::default(),
            seed: 0,
        }
    }

    /// Fleet settings in force: present for EV scenarios only.
    pub fn effective_fleet(&self) -> Option<FleetSettings> {
        match self.technology {
            Technology::PvPlusEv => Some(self.fleet.unwrap_or_default()),
            Technology::PvPlusBattery => None,
        }
    }

    pub fn tariff(&self) -> Tariff {
        Tariff {
            import_price: self.tariff.import_price,
            export_price: if self.fit { self.tariff.export_price } else { 0.0 },
        }
    }

    pub fn n_vehicles_per_house(&self) -> usize {
        self.effective_fleet().map_or(0, |f| f.ev_per_house)
    }

    /// Range checks, each reported with the offending key path.
    pub fn validate(&self) -> Result<(), OptimizerError> {
        check(self.district.n_houses >= 1, "district.n_houses", "must be at least 1")?;
        check_positive(self.district.max_pv_kw_per_house, "district.max_pv_kw_per_house")?;
        check_positive(self.sweep.pv_step_kw, "sweep.pv_step_kw")?;
        check_non_negative(self.sweep.pv_max_kw, "sweep.pv_max_kw")?;
        check(
            self.sweep.pv_max_kw <= self.district.max_pv_kw_per_house,
            "sweep.pv_max_kw",
            format!("{} exceeds the rooftop limit {}", self.sweep.pv_max_kw, self.district.max_pv_kw_per_house),
        )?;
        check_positive(self.sweep.battery_step_kwh, "sweep.battery_step_kwh")?;
        check_non_negative(self.sweep.battery_max_kwh, "sweep.battery_max_kwh")?;
        check_non_negative(self.tariff.import_price, "tariff.import_price")?;
        check_non_negative(self.tariff.export_price, "tariff.export_price")?;
        check_non_negative(self.costs.pv_cost_0, "costs.pv_cost_0")?;
        check_non_negative(self.costs.battery_cost_0, "costs.battery_cost_0")?;
        check_non_negative(self.costs.ev_add_cost_0, "costs.ev_add_cost_0")?;
        for (v, p) in [
            (self.costs.annual_rates.pv, "costs.annual_rates.pv"),
            (self.costs.annual_rates.battery, "costs.annual_rates.battery"),
            (self.costs.annual_rates.ev_add, "costs.annual_rates.ev_add"),
        ] {
            check(v > 0.0 && v <= 1.0, p, format!("{v} must lie in (0, 1]"))?;
        }
        check(self.finance.discount_rate > -1.0, "finance.discount_rate", "must exceed -1")?;
        check(self.finance.project_years >= 1, "finance.project_years", "must be at least 1")?;
        check_non_negative(self.emissions.grid_kg_per_kwh, "emissions.grid_kg_per_kwh")?;
        check_non_negative(self.emissions.gasoline_kg_per_l, "emissions.gasoline_kg_per_l")?;
        check_positive(self.transport.annual_km, "transport.annual_km")?;
        check_positive(self.transport.gasoline_km_per_l, "transport.gasoline_km_per_l")?;
        check_positive(self.transport.gasoline_price, "transport.gasoline_price")?;
        check_positive(self.transport.ev_battery_kwh, "transport.ev_battery_kwh")?;
        check_positive(self.transport.ev_km_per_kwh, "transport.ev_km_per_kwh")?;
        check(
            self.pv.target_cf >= 0.0 && self.pv.target_cf < 1.0,
            "pv.target_cf",
            format!("{} must lie in [0, 1)", self.pv.target_cf),
        )?;
        check(
            (0.0..1.0).contains(&self.pv.annual_degradation),
            "pv.annual_degradation",
            format!("{} must lie in [0, 1)", self.pv.annual_degradation),
        )?;
        let s = &self.storage;
        check(s.charge_efficiency > 0.0 && s.charge_efficiency <= 1.0, "storage.charge_efficiency", "must lie in (0, 1]")?;
        check(
            s.discharge_efficiency > 0.0 && s.discharge_efficiency <= 1.0,
            "storage.discharge_efficiency",
            "must lie in (0, 1]",
        )?;
        if let Some(l) = s.power_limit_kw {
            check_positive(l, "storage.power_limit_kw")?;
        }
        check_fraction(s.degradation.calendar_rate, "storage.degradation.calendar_rate")?;
        check_non_negative(s.degradation.cycle_rate, "storage.degradation.cycle_rate")?;
        check(
            s.replacement_threshold > 0.0 && s.replacement_threshold < 1.0,
            "storage.replacement_threshold",
            "must lie in (0, 1)",
        )?;
        if let Some(f) = self.effective_fleet() {
            check(f.ev_per_house >= 1, "fleet.ev_per_house", "must be at least 1")?;
            check_positive(f.battery_kwh_per_ev, "fleet.battery_kwh_per_ev")?;
            check_fraction(f.v2h_fraction, "fleet.v2h_fraction")?;
            check_fraction(f.daytime_availability, "fleet.daytime_availability")?;
            check(f.trips_per_day <= 12, "fleet.trips_per_day", "at most 12 trips fit in the daytime window")?;
            check_non_negative(f.energy_per_trip_kwh, "fleet.energy_per_trip_kwh")?;
            check_non_negative(f.km_per_trip, "fleet.km_per_trip")?;
            let reserve = (1.0 - f.v2h_fraction) * f.battery_kwh_per_ev;
            check(
                f.trips_per_day as f64 * f.energy_per_trip_kwh <= reserve,
                "fleet.energy_per_trip_kwh",
                "daily driving exceeds the driving reserve",
            )?;
        }
        Ok(())
    }
}

/// Loaded inputs: one gap-free demand series per house and a calibrated
/// capacity-factor series, all 8760 hours.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    pub loads: Vec<Vec<f64>>,
    pub cf: Vec<f64>,
}

impl ScenarioData {
    pub fn aggregate_load(&self) -> Vec<f64> {
        let mut total = vec![0.0; HOURS_PER_YEAR];
        for l in &self.loads {
            for (t, v) in total.iter_mut().zip(l) {
                *t += v;
            }
        }
        total
    }

    fn check(&self, n_houses: usize) -> Result<(), OptimizerError> {
        if self.loads.len() != n_houses {
            return Err(OptimizerError::Data(format!(
                "{} demand profiles for {n_houses} houses",
                self.loads.len()
            )));
        }
        if self.cf.len() != HOURS_PER_YEAR || self.loads.iter().any(|l| l.len() != HOURS_PER_YEAR) {
            return Err(OptimizerError::Data(format!("series must have {HOURS_PER_YEAR} hours")));
        }
        Ok(())
    }
}

/// Vehicle availability and driving for one dispatch site.
#[derive(Debug, Clone, PartialEq)]
pub struct EvSite {
    pub kind: StorageKind,
    pub n_vehicles: usize,
    pub availability: AvailabilityProfile,
    pub driving_kwh: Vec<f64>,
}

/// One system to dispatch: a house, or the whole district.
#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub load: Vec<f64>,
    /// Houses represented; results are divided by this for per-house figures.
    pub n_houses: usize,
    pub ev: Option<EvSite>,
}

fn vehicle_schedules(cfg: &ScenarioConfig, fleet: &FleetSettings) -> Result<Vec<TripSchedule>, OptimizerError> {
    let n_ev = fleet.ev_per_house * cfg.district.n_houses;
    (0..n_ev as u64)
        .map(|v| Ok(sample_vehicle_trips(cfg.seed, v, DAYS_PER_YEAR, fleet.trips_per_day)?))
        .collect()
}

fn individual_ev(fleet: &FleetSettings, schedules: &[TripSchedule], kind: StorageKind) -> EvSite {
    let profiles: Vec<AvailabilityProfile> = schedules
        .iter()
        .map(|s| AvailabilityProfile((0..HOURS_PER_YEAR).map(|h| if s.is_away(h) { 0.0 } else { 1.0 }).collect()))
        .collect();
    let cfg = FleetConfig {
        n_ev: schedules.len(),
        energy_per_trip_kwh: if fleet.driving { fleet.energy_per_trip_kwh } else { 0.0 },
        ..fleet.fleet_config(1, 0)
    };
    EvSite {
        kind,
        n_vehicles: schedules.len(),
        availability: AvailabilityProfile::mean_of(&profiles),
        driving_kwh: driving_draw(&cfg, Some(schedules), FleetMode::Individual),
    }
}

/// Dispatch sites for the configured mode: one per house (individual) or a
/// single district site (aggregated).
pub fn build_sites(cfg: &ScenarioConfig, data: &ScenarioData, mode: AnalysisMode) -> Result<Vec<Site>, OptimizerError> {
    cfg.validate()?;
    data.check(cfg.district.n_houses)?;
    let fleet = cfg.effective_fleet();
    let schedules = match &fleet {
        Some(f) => vehicle_schedules(cfg, f)?,
        None => Vec::new(),
    };
    match mode {
        AnalysisMode::Individual => Ok(data
            .loads
            .iter()
            .enumerate()
            .map(|(i, load)| Site {
                load: load.clone(),
                n_houses: 1,
                ev: fleet.map(|f| {
                    let k = f.ev_per_house;
                    individual_ev(&f, &schedules[i * k..(i + 1) * k], StorageKind::EvIndividual)
                }),
            })
            .collect()),
        AnalysisMode::Aggregated => {
            let n = cfg.district.n_houses;
            let ev = fleet.map(|f| match f.pooled_availability {
                PooledAvailability::FleetMean => individual_ev(&f, &schedules, StorageKind::EvPooled),
                PooledAvailability::DaytimeFraction => {
                    let n_ev = f.ev_per_house * n;
                    let fc = FleetConfig {
                        energy_per_trip_kwh: if f.driving { f.energy_per_trip_kwh } else { 0.0 },
                        ..f.fleet_config(n, cfg.seed)
                    };
                    EvSite {
                        kind: StorageKind::EvPooled,
                        n_vehicles: n_ev,
                        availability: pooled_profile(f.daytime_availability),
                        driving_kwh: driving_draw(&fc, None, FleetMode::Pooled),
                    }
                }
            });
            Ok(vec![Site { load: data.aggregate_load(), n_houses: n, ev }])
        }
    }
}

/// Result of one (p, b) configuration on one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub p_kw: f64,
    /// Stationary capacity, or the V2H-usable share of the vehicle batteries.
    pub b_kwh: f64,
    pub summary: FinancialSummary,
    /// None when an index is undefined (no load).
    pub metrics: Option<MetricsRow>,
    pub annual_base_cost: f64,
    pub year1: EnergyTotals,
    pub replacement_years: Vec<u32>,
}

impl Evaluation {
    /// Extensive quantities divided by `n`; ratios unchanged.
    pub fn per_house(mut self, n: usize) -> Self {
        let k = 1.0 / n as f64;
        self.p_kw *= k;
        self.b_kwh *= k;
        let s = &mut self.summary;
        s.npv_total *= k;
        s.npv_electricity *= k;
        s.npv_gasoline *= k;
        s.capex *= k;
        s.cash_flows.iter_mut().for_each(|f| *f *= k);
        self.annual_base_cost *= k;
        if let Some(m) = &mut self.metrics {
            m.emi_base_kg *= k;
            m.emi_system_kg *= k;
        }
        let y = &mut self.year1;
        for v in [
            &mut y.load,
            &mut y.pv,
            &mut y.import,
            &mut y.export,
            &mut y.pv_to_load,
            &mut y.pv_to_batt,
            &mut y.batt_to_load,
            &mut y.grid_to_batt,
            &mut y.driving,
            &mut y.losses,
            &mut y.soc_start,
            &mut y.soc_end,
            &mut y.throughput,
            &mut y.energy_cost,
        ] {
            *v *= k;
        }
        self
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn mean_opt(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| mean(v.into_iter()))
}

/// Field-wise arithmetic mean. IRR and payback average the houses where
/// they exist; metrics average the houses where they are defined.
pub fn average_evaluations(evals: &[Evaluation]) -> Evaluation {
    let it = || evals.iter();
    let n_years = evals[0].summary.cash_flows.len();
    let summary = FinancialSummary {
        npv_total: mean(it().map(|e| e.summary.npv_total)),
        npv_electricity: mean(it().map(|e| e.summary.npv_electricity)),
        npv_gasoline: mean(it().map(|e| e.summary.npv_gasoline)),
        irr: mean_opt(it().map(|e| e.summary.irr)),
        spb_years: mean_opt(it().map(|e| e.summary.spb_years)),
        capex: mean(it().map(|e| e.summary.capex)),
        cash_flows: (0..n_years).map(|y| mean(it().map(|e| e.summary.cash_flows[y]))).collect(),
    };
    let rows: Vec<MetricsRow> = it().filter_map(|e| e.metrics).collect();
    let metrics = (!rows.is_empty()).then(|| {
        let r = || rows.iter();
        MetricsRow {
            es_pct: mean(r().map(|m| m.es_pct)),
            ss_pct: mean(r().map(|m| m.ss_pct)),
            sc_pct: mean(r().map(|m| m.sc_pct)),
            cs_pct: mean(r().map(|m| m.cs_pct)),
            co2_reduction_pct: mean(r().map(|m| m.co2_reduction_pct)),
            emi_base_kg: mean(r().map(|m| m.emi_base_kg)),
            emi_system_kg: mean(r().map(|m| m.emi_system_kg)),
        }
    });
    let y = |f: fn(&EnergyTotals) -> f64| mean(it().map(|e| f(&e.year1)));
    let year1 = EnergyTotals {
        load: y(|t| t.load),
        pv: y(|t| t.pv),
        import: y(|t| t.import),
        export: y(|t| t.export),
        pv_to_load: y(|t| t.pv_to_load),
        pv_to_batt: y(|t| t.pv_to_batt),
        batt_to_load: y(|t| t.batt_to_load),
        grid_to_batt: y(|t| t.grid_to_batt),
        driving: y(|t| t.driving),
        losses: y(|t| t.losses),
        soc_start: y(|t| t.soc_start),
        soc_end: y(|t| t.soc_end),
        throughput: y(|t| t.throughput),
        energy_cost: y(|t| t.energy_cost),
    };
    let mut replacement_years: Vec<u32> = it().flat_map(|e| e.replacement_years.iter().copied()).collect();
    replacement_years.sort_unstable();
    replacement_years.dedup();
    Evaluation {
        p_kw: mean(it().map(|e| e.p_kw)),
        b_kwh: mean(it().map(|e| e.b_kwh)),
        summary,
        metrics,
        annual_base_cost: mean(it().map(|e| e.annual_base_cost)),
        year1,
        replacement_years,
    }
}

fn site_storage(cfg: &ScenarioConfig, site: &Site, b_kwh: f64) -> (StorageConfig, StorageInvestment, f64) {
    let s = &cfg.storage;
    let limit = s.power_limit_kw.map(|l| l * site.n_houses as f64);
    match (&site.ev, cfg.effective_fleet()) {
        (Some(ev), Some(f)) => {
            let nominal = ev.n_vehicles as f64 * f.battery_kwh_per_ev;
            let usable = f.v2h_fraction * nominal;
            let storage = StorageConfig {
                kind: ev.kind,
                nominal_kwh: nominal,
                soc_floor_kwh: nominal - usable,
                charge_efficiency: s.charge_efficiency,
                discharge_efficiency: s.discharge_efficiency,
                power_limit_kw: limit,
                availability: ev.availability.clone(),
                driving_kwh: ev.driving_kwh.clone(),
                degradation: s.degradation,
                replacement_threshold: s.replacement_threshold,
            };
            let inv = StorageInvestment::Vehicles { count: ev.n_vehicles, battery_kwh: f.battery_kwh_per_ev };
            (storage, inv, usable)
        }
        _ => {
            let mut storage = StorageConfig::stationary(b_kwh, HOURS_PER_YEAR);
            if b_kwh > 0.0 {
                storage.charge_efficiency = s.charge_efficiency;
                storage.discharge_efficiency = s.discharge_efficiency;
                storage.power_limit_kw = limit;
                storage.degradation = s.degradation;
                storage.replacement_threshold = s.replacement_threshold;
            }
            let inv = if b_kwh > 0.0 { StorageInvestment::Stationary { kwh: b_kwh } } else { StorageInvestment::None };
            (storage, inv, b_kwh)
        }
    }
}

/// Simulates and prices one configuration for a project starting in `year`.
/// Figures are for the whole site. For EV sites `b_kwh` is ignored and the
/// fleet's V2H-usable capacity is used.
pub fn evaluate(
    cfg: &ScenarioConfig,
    site: &Site,
    cf: &[f64],
    p_kw: f64,
    b_kwh: f64,
    year: i32,
) -> Result<Evaluation, OptimizerError> {
    let n_years = cfg.finance.project_years;
    let tariff = cfg.tariff();
    let (storage, investment, b_eff) = site_storage(cfg, site, b_kwh);
    let max_pv = cfg.district.max_pv_kw_per_house * site.n_houses as f64;
    let pv_cfg = PvConfig::new(p_kw, cfg.pv.annual_degradation, max_pv.max(p_kw))?;
    let params = ProjectParams { years: n_years, start_year: year };
    let project = simulate_project_hours(&site.load, cf, &pv_cfg, &storage, &tariff, &params)
        .map_err(|source| OptimizerError::Simulation { p_kw, b_kwh: b_eff, source })?;

    let annual_load: f64 = site.load.iter().sum();
    let base_cost = annual_load * tariff.import_price;
    let base_costs = vec![base_cost; n_years as usize];
    let system_costs = project
        .years
        .iter()
        .enumerate()
        .map(|(i, y)| {
            annual_electricity_cost(
                &y.totals,
                &tariff,
                p_kw,
                b_eff,
                &cfg.costs,
                year,
                year + i as i32,
                y.replacement_occurred,
            )
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let capex = system_cost(p_kw, investment, year, &cfg.costs)?;
    let npv_e = npv_electricity(&base_costs, &system_costs, capex, &cfg.finance)?;

    let n_vehicles = site.ev.as_ref().map_or(0, |e| e.n_vehicles);
    let is_ev = site.ev.is_some();
    let (npv_g, gasoline_yearly) = if is_ev {
        (npv_gasoline(&cfg.transport, n_vehicles, &cfg.finance), cfg.transport.annual_gasoline_cost(n_vehicles))
    } else {
        (0.0, 0.0)
    };
    let cash_flows: Vec<f64> =
        base_costs.iter().zip(&system_costs).map(|(b, s)| b - s + gasoline_yearly).collect();
    let summary = FinancialSummary {
        npv_total: npv_e + npv_g,
        npv_electricity: npv_e,
        npv_gasoline: npv_g,
        irr: irr(&cash_flows, capex),
        spb_years: spb(&cash_flows, capex),
        capex,
        cash_flows,
    };

    let year1 = project.years[0].totals;
    let annual_base_cost = base_cost + gasoline_yearly;
    let metrics = match (
        energy_indices(&year1),
        cost_saving(&summary, annual_base_cost, n_years),
        co2(annual_load, year1.import, &cfg.emissions, &cfg.transport, n_vehicles, is_ev),
    ) {
        (Ok(idx), Ok(cs), Ok(emi)) => Some(MetricsRow::new(idx, cs, emi)),
        _ => None,
    };
    Ok(Evaluation {
        p_kw,
        b_kwh: b_eff,
        summary,
        metrics,
        annual_base_cost,
        year1,
        replacement_years: project.replacement_years,
    })
}

/// Hourly flows of the first project year for one configuration.
pub fn year_one_trace(
    cfg: &ScenarioConfig,
    site: &Site,
    cf: &[f64],
    p_kw: f64,
    b_kwh: f64,
    year: i32,
) -> Result<Vec<HourRecord>, OptimizerError> {
    let (storage, _, b_eff) = site_storage(cfg, site, b_kwh);
    let max_pv = cfg.district.max_pv_kw_per_house * site.n_houses as f64;
    let pv_cfg = PvConfig::new(p_kw, cfg.pv.annual_degradation, max_pv.max(p_kw))?;
    let params = ProjectParams { years: 1, start_year: year };
    let mut project = simulate_project_hours(&site.load, cf, &pv_cfg, &storage, &cfg.tariff(), &params)
        .map_err(|source| OptimizerError::Simulation { p_kw, b_kwh: b_eff, source })?;
    Ok(std::mem::take(&mut project.years[0].hourly))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub p_kw: f64,
    pub b_kwh: f64,
    pub npv_total: f64,
}

/// Per-house figures at the optimum for one start year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub year: i32,
    pub mode: AnalysisMode,
    pub technology: Technology,
    pub fit: bool,
    pub best: Evaluation,
    /// NPV per house over the grid (house mean in individual mode).
    pub surface: Vec<SurfacePoint>,
}

/// Index of the largest value; earlier entries win ties within tolerance.
pub fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if v <= values[b] + NPV_TIE_TOLERANCE => {}
            _ => best = Some(i),
        }
    }
    best
}

fn site_grid(cfg: &ScenarioConfig, site: &Site) -> Vec<(f64, f64)> {
    let k = site.n_houses as f64;
    let ps = cfg.sweep.pv_values();
    let bs = if site.ev.is_some() { vec![0.0] } else { cfg.sweep.battery_values() };
    ps.iter().flat_map(|&p| bs.iter().map(move |&b| (p * k, b * k))).collect()
}

/// Sweeps the grid on one site; returns every evaluation in grid order
/// (p ascending, then b ascending) and the index of the optimum.
pub fn sweep_site(
    cfg: &ScenarioConfig,
    site: &Site,
    cf: &[f64],
    year: i32,
) -> Result<(Vec<Evaluation>, usize), OptimizerError> {
    let grid = site_grid(cfg, site);
    if grid.is_empty() {
        return Err(OptimizerError::EmptyGrid);
    }
    let evals = grid
        .par_iter()
        .map(|&(p, b)| evaluate(cfg, site, cf, p, b, year))
        .collect::<Result<Vec<_>, _>>()?;
    let npvs: Vec<f64> = evals.iter().map(|e| e.summary.npv_total).collect();
    let best = argmax_first(&npvs).ok_or(OptimizerError::EmptyGrid)?;
    Ok((evals, best))
}

fn sweep_mode(
    cfg: &ScenarioConfig,
    data: &ScenarioData,
    year: i32,
    mode: AnalysisMode,
) -> Result<SweepResult, OptimizerError> {
    let sites = build_sites(cfg, data, mode)?;
    let per_site = sites
        .par_iter()
        .map(|s| sweep_site(cfg, s, &data.cf, year))
        .collect::<Result<Vec<_>, _>>()?;
    let (best, surface) = match mode {
        AnalysisMode::Aggregated => {
            let n = sites[0].n_houses;
            let (evals, i) = per_site.into_iter().next().ok_or(OptimizerError::EmptyGrid)?;
            let surface = evals
                .iter()
                .map(|e| SurfacePoint {
                    p_kw: e.p_kw / n as f64,
                    b_kwh: e.b_kwh / n as f64,
                    npv_total: e.summary.npv_total / n as f64,
                })
                .collect();
            (evals[i].clone().per_house(n), surface)
        }
        AnalysisMode::Individual => {
            let bests: Vec<Evaluation> = per_site.iter().map(|(e, i)| e[*i].clone()).collect();
            let n_points = per_site[0].0.len();
            let surface = (0..n_points)
                .map(|j| SurfacePoint {
                    p_kw: per_site[0].0[j].p_kw,
                    b_kwh: mean(per_site.iter().map(|(e, _)| e[j].b_kwh)),
                    npv_total: mean(per_site.iter().map(|(e, _)| e[j].summary.npv_total)),
                })
                .collect();
            (average_evaluations(&bests), surface)
        }
    };
    Ok(SweepResult { year, mode, technology: cfg.technology, fit: cfg.fit, best, surface })
}

/// Best configuration for a project starting in `year`, in the configured mode.
pub fn sweep(cfg: &ScenarioConfig, data: &ScenarioData, year: i32) -> Result<SweepResult, OptimizerError> {
    sweep_mode(cfg, data, year, cfg.mode)
}

/// Independent sweeps for each start year.
pub fn trajectory(cfg: &ScenarioConfig, data: &ScenarioData, years: &[i32]) -> Result<Vec<SweepResult>, OptimizerError> {
    years.iter().map(|&y| sweep(cfg, data, y)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeDeltas {
    pub npv: f64,
    pub npv_pct: f64,
    pub sc_pct: f64,
    pub ss_pct: f64,
    pub cs_pct: f64,
    pub co2_reduction_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeComparison {
    pub individual: SweepResult,
    pub aggregated: SweepResult,
    /// Aggregated minus individual, per house.
    pub deltas: ModeDeltas,
}

pub fn compare_modes(cfg: &ScenarioConfig, data: &ScenarioData, year: i32) -> Result<ModeComparison, OptimizerError> {
    let individual = sweep_mode(cfg, data, year, AnalysisMode::Individual)?;
    let aggregated = sweep_mode(cfg, data, year, AnalysisMode::Aggregated)?;
    let (i, a) = (&individual.best, &aggregated.best);
    let m = |e: &Evaluation, f: fn(&MetricsRow) -> f64| e.metrics.as_ref().map_or(f64::NAN, f);
    let npv = a.summary.npv_total - i.summary.npv_total;
    let deltas = ModeDeltas {
        npv,
        npv_pct: if i.summary.npv_total != 0.0 { npv / i.summary.npv_total.abs() * 100.0 } else { 0.0 },
        sc_pct: m(a, |r| r.sc_pct) - m(i, |r| r.sc_pct),
        ss_pct: m(a, |r| r.ss_pct) - m(i, |r| r.ss_pct),
        cs_pct: m(a, |r| r.cs_pct) - m(i, |r| r.cs_pct),
        co2_reduction_pct: m(a, |r| r.co2_reduction_pct) - m(i, |r| r.co2_reduction_pct),
    };
    Ok(ModeComparison { individual, aggregated, deltas })
}
