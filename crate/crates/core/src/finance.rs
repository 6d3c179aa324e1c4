//! Technology cost trajectories and discounted cash-flow metrics.
//!
//! All money is in USD (converted from yen at 110 JPY/USD upstream).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{EnergyTotals, Tariff};

pub const DEFAULT_DISCOUNT_RATE: f64 = 0.03;
pub const DEFAULT_PROJECT_YEARS: u32 = 25;
pub const JPY_PER_USD: f64 = 110.0;

const IRR_LOW: f64 = -0.99;
const IRR_HIGH: f64 = 10.0;
const IRR_SCAN_STEPS: usize = 4400;

#[derive(Debug, Error, PartialEq)]
pub enum FinanceError {
    #[error("year {year} precedes the cost base year {base_year}")]
    BeforeBaseYear { year: i32, base_year: i32 },
    #[error("cash flow sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid finance parameter: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostComponent {
    Pv,
    Battery,
    EvAdd,
}

/// Multiplicative year-on-year cost factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostRates {
    pub pv: f64,
    pub battery: f64,
    pub ev_add: f64,
}

impl Default for CostRates {
    fn default() -> Self {
        Self { pv: 0.925, battery: 0.94, ev_add: 0.81 }
    }
}

/// Annual PV upkeep (inverter replacements included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Maintenance {
    /// Share of the project-start PV cost per kW, per year.
    CapexFraction(f64),
    /// Fixed $/kW/yr.
    PerKw(f64),
}

/// Price per kWh charged when a battery is replaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ReplacementPricing {
    /// Stationary battery cost in the calendar year of replacement.
    BatteryTrajectory,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TechnologyCostSchedule {
    pub base_year: i32,
    /// $/kW
    pub pv_cost_0: f64,
    /// $/kWh
    pub battery_cost_0: f64,
    /// EV-minus-ICE premium plus V2H hardware, $/kWh of vehicle battery
    pub ev_add_cost_0: f64,
    pub annual_rates: CostRates,
    pub maintenance: Maintenance,
    pub replacement: ReplacementPricing,
}

impl Default for TechnologyCostSchedule {
    fn default() -> Self {
        Self {
            base_year: 2020,
            pv_cost_0: 2200.0,
            battery_cost_0: 1182.0,
            ev_add_cost_0: 200.0,
            annual_rates: CostRates::default(),
            maintenance: Maintenance::CapexFraction(0.01),
            replacement: ReplacementPricing::BatteryTrajectory,
        }
    }
}

impl TechnologyCostSchedule {
    pub fn validate(&self) -> Result<(), FinanceError> {
        let costs = [self.pv_cost_0, self.battery_cost_0, self.ev_add_cost_0];
        if costs.iter().any(|c| !(*c >= 0.0)) {
            return Err(FinanceError::Invalid("base costs must be non-negative".into()));
        }
        let r = self.annual_rates;
        if [r.pv, r.battery, r.ev_add].iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
            return Err(FinanceError::Invalid("annual rates must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Unit cost in `year`: $/kW for PV, $/kWh otherwise.
    pub fn cost_at_year(&self, component: CostComponent, year: i32) -> Result<f64, FinanceError> {
        if year < self.base_year {
            return Err(FinanceError::BeforeBaseYear { year, base_year: self.base_year });
        }
        let (c0, rate) = match component {
            CostComponent::Pv => (self.pv_cost_0, self.annual_rates.pv),
            CostComponent::Battery => (self.battery_cost_0, self.annual_rates.battery),
            CostComponent::EvAdd => (self.ev_add_cost_0, self.annual_rates.ev_add),
        };
        Ok(c0 * rate.powi(year - self.base_year))
    }

    /// PV maintenance in $/kW/yr for a project starting in `start_year`.
    pub fn maintenance_per_kw(&self, start_year: i32) -> Result<f64, FinanceError> {
        match self.maintenance {
            Maintenance::CapexFraction(f) => Ok(f * self.cost_at_year(CostComponent::Pv, start_year)?),
            Maintenance::PerKw(x) => Ok(x),
        }
    }

    /// Replacement price in $/kWh for a battery swapped in `calendar_year`.
    pub fn replacement_per_kwh(&self, calendar_year: i32) -> Result<f64, FinanceError> {
        match self.replacement {
            ReplacementPricing::BatteryTrajectory => self.cost_at_year(CostComponent::Battery, calendar_year),
            ReplacementPricing::Fixed(x) => Ok(x),
        }
    }
}

/// What the storage investment consists of.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StorageInvestment {
    None,
    Stationary { kwh: f64 },
    /// Vehicles bought instead of ICE cars; priced per kWh of full battery.
    Vehicles { count: usize, battery_kwh: f64 },
}

/// Up-front cost of `p` kW of PV plus the storage, at year-`t` prices.
pub fn system_cost(
    p_kw: f64,
    storage: StorageInvestment,
    t: i32,
    schedule: &TechnologyCostSchedule,
) -> Result<f64, FinanceError> {
    let pv = p_kw * schedule.cost_at_year(CostComponent::Pv, t)?;
    let store = match storage {
        StorageInvestment::None => 0.0,
        StorageInvestment::Stationary { kwh } => kwh * schedule.cost_at_year(CostComponent::Battery, t)?,
        StorageInvestment::Vehicles { count, battery_kwh } => {
            count as f64 * battery_kwh * schedule.cost_at_year(CostComponent::EvAdd, t)?
        }
    };
    Ok(pv + store)
}

/// Yearly electricity bill with the system in place: imports billed,
/// exports credited, PV upkeep every year, and `b_kwh` of battery
/// replaced in replacement years.
#[allow(clippy::too_many_arguments)]
pub fn annual_electricity_cost(
    flows: &EnergyTotals,
    tariff: &Tariff,
    p_kw: f64,
    b_kwh: f64,
    schedule: &TechnologyCostSchedule,
    start_year: i32,
    calendar_year: i32,
    replacement_this_year: bool,
) -> Result<f64, FinanceError> {
    let mut cost = flows.import * tariff.import_price - flows.export * tariff.export_price;
    cost += p_kw * schedule.maintenance_per_kw(start_year)?;
    if replacement_this_year {
        cost += b_kwh * schedule.replacement_per_kwh(calendar_year)?;
    }
    Ok(cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinanceParams {
    pub discount_rate: f64,
    pub project_years: u32,
}

impl Default for FinanceParams {
    fn default() -> Self {
        Self { discount_rate: DEFAULT_DISCOUNT_RATE, project_years: DEFAULT_PROJECT_YEARS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportParams {
    pub annual_km: f64,
    pub gasoline_km_per_l: f64,
    /// $/l
    pub gasoline_price: f64,
    pub ev_battery_kwh: f64,
    pub ev_km_per_kwh: f64,
}

impl Default for TransportParams {
    fn default() -> Self {
        Self {
            annual_km: 6368.0,
            gasoline_km_per_l: 12.6,
            gasoline_price: 1.29,
            ev_battery_kwh: 40.0,
            ev_km_per_kwh: 5.3,
        }
    }
}

impl TransportParams {
    pub fn annual_litres(&self, n_vehicles: usize) -> f64 {
        n_vehicles as f64 * self.annual_km / self.gasoline_km_per_l
    }

    pub fn annual_gasoline_cost(&self, n_vehicles: usize) -> f64 {
        self.annual_litres(n_vehicles) * self.gasoline_price
    }
}

/// Present value of 1 paid at the end of each of `years` years.
pub fn annuity_factor(rate: f64, years: u32) -> f64 {
    (1..=years).map(|n| (1.0 + rate).powi(-(n as i32))).sum()
}

/// Discounted sum of `(base - system)` over years 1..=N, less `capex`.
pub fn npv_electricity(
    base_costs: &[f64],
    system_costs: &[f64],
    capex: f64,
    params: &FinanceParams,
) -> Result<f64, FinanceError> {
    if base_costs.len() != system_costs.len() {
        return Err(FinanceError::LengthMismatch(base_costs.len(), system_costs.len()));
    }
    let flows: Vec<f64> = base_costs.iter().zip(system_costs).map(|(b, s)| b - s).collect();
    Ok(present_value(&flows, params.discount_rate) - capex)
}

/// Discounted fuel spending avoided by replacing `n_vehicles` ICE cars.
pub fn npv_gasoline(transport: &TransportParams, n_vehicles: usize, params: &FinanceParams) -> f64 {
    let yearly = vec![transport.annual_gasoline_cost(n_vehicles); params.project_years as usize];
    present_value(&yearly, params.discount_rate)
}

/// Σ flows[n-1] / (1+rate)^n for n = 1..
pub fn present_value(flows: &[f64], rate: f64) -> f64 {
    let mut df = 1.0;
    let mut pv = 0.0;
    for f in flows {
        df /= 1.0 + rate;
        pv += f * df;
    }
    pv
}

fn npv_at(flows: &[f64], capex: f64, rate: f64) -> f64 {
    present_value(flows, rate) - capex
}

/// Smallest discount rate in (-0.99, 10) at which the project NPV is zero,
/// or `None` when NPV keeps one sign over that range or nothing is invested.
pub fn irr(flows: &[f64], capex: f64) -> Option<f64> {
    if !(capex > 0.0) {
        return None;
    }
    let tol = 1e-6 * capex;
    let step = (IRR_HIGH - IRR_LOW) / IRR_SCAN_STEPS as f64;
    let mut lo = IRR_LOW + step * 1e-3;
    let mut f_lo = npv_at(flows, capex, lo);
    if f_lo.abs() < tol {
        return Some(lo);
    }
    for i in 1..=IRR_SCAN_STEPS {
        let hi = if i == IRR_SCAN_STEPS { IRR_HIGH } else { IRR_LOW + step * i as f64 };
        let f_hi = npv_at(flows, capex, hi);
        if f_hi == 0.0 || f_lo.signum() != f_hi.signum() {
            return Some(bisect(flows, capex, lo, hi, f_lo, tol));
        }
        lo = hi;
        f_lo = f_hi;
    }
    None
}

fn bisect(flows: &[f64], capex: f64, mut lo: f64, mut hi: f64, f_lo: f64, tol: f64) -> f64 {
    let lo_sign = f_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = npv_at(flows, capex, mid);
        if f_mid.abs() < tol || hi - lo < 1e-15 {
            return mid;
        }
        if f_mid.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Years until cumulative undiscounted savings cover `capex`, interpolated
/// linearly inside the payback year. `None` if never repaid.
pub fn spb(flows: &[f64], capex: f64) -> Option<f64> {
    if capex <= 0.0 {
        return Some(0.0);
    }
    let mut cum = 0.0;
    for (i, &f) in flows.iter().enumerate() {
        let next = cum + f;
        if next >= capex && f > 0.0 {
            return Some(i as f64 + (capex - cum) / f);
        }
        cum = next;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinancialSummary {
    pub npv_total: f64,
    pub npv_electricity: f64,
    pub npv_gasoline: f64,
    pub irr: Option<f64>,
    pub spb_years: Option<f64>,
    pub capex: f64,
    /// Net yearly savings F_n for n = 1..=N, fuel included.
    pub cash_flows: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sched() -> TechnologyCostSchedule {
        TechnologyCostSchedule::default()
    }

    #[test]
    fn cost_trajectory_anchor_points() {
        let s = sched();
        assert!((s.cost_at_year(CostComponent::Pv, 2030).unwrap() / 1000.0 - 1.01).abs() <= 0.005);
        assert!((s.cost_at_year(CostComponent::Battery, 2030).unwrap() - 636.0).abs() <= 1.0);
        assert!((s.cost_at_year(CostComponent::EvAdd, 2040).unwrap() - 3.0).abs() <= 0.5);
        assert_eq!(s.cost_at_year(CostComponent::Pv, 2020).unwrap(), 2200.0);
        assert!(s.cost_at_year(CostComponent::Pv, 2019).is_err());
    }

    #[test]
    fn system_cost_cases() {
        let s = sched();
        assert_eq!(system_cost(0.0, StorageInvestment::None, 2030, &s).unwrap(), 0.0);
        let pv_only = system_cost(10.0, StorageInvestment::None, 2030, &s).unwrap();
        assert_relative_eq!(pv_only, 10.0 * s.cost_at_year(CostComponent::Pv, 2030).unwrap());
        assert!((pv_only - 10_100.0).abs() < 100.0);
        // one 40 kWh vehicle (20 kWh usable) at the base-year 200 $/kWh
        let ev = system_cost(0.0, StorageInvestment::Vehicles { count: 1, battery_kwh: 40.0 }, 2020, &s).unwrap();
        assert_eq!(ev, 8000.0);
    }

    #[test]
    fn annual_bill_terms() {
        let s = sched();
        let tariff = Tariff { import_price: 0.22, export_price: 0.09 };
        let base = EnergyTotals { import: 5915.0, ..Default::default() };
        let c = annual_electricity_cost(&base, &tariff, 0.0, 0.0, &s, 2030, 2030, false).unwrap();
        assert!((c - 1301.30).abs() < 1e-9);

        let exp = EnergyTotals { export: 1000.0, ..Default::default() };
        let c = annual_electricity_cost(&exp, &tariff, 0.0, 0.0, &s, 2030, 2030, false).unwrap();
        assert!((c + 90.0).abs() < 1e-9);

        let none = EnergyTotals::default();
        let with = annual_electricity_cost(&none, &tariff, 0.0, 20.0, &s, 2030, 2032, true).unwrap();
        let oracle = 20.0 * s.cost_at_year(CostComponent::Battery, 2032).unwrap();
        assert_eq!(with, oracle);
        assert!((with - 11_250.0).abs() < 15.0);
    }

    #[test]
    fn maintenance_is_share_of_start_year_capex() {
        let s = sched();
        let m = s.maintenance_per_kw(2030).unwrap();
        assert_relative_eq!(m, 0.01 * s.cost_at_year(CostComponent::Pv, 2030).unwrap());
    }

    #[test]
    fn npv_cases() {
        let p = FinanceParams::default();
        assert_eq!(npv_electricity(&[5.0; 25], &[5.0; 25], 0.0, &p).unwrap(), 0.0);
        let one = FinanceParams { discount_rate: 0.03, project_years: 1 };
        assert!(npv_electricity(&[100.0], &[0.0], 100.0 / 1.03, &one).unwrap().abs() < 1e-12);

        let oracle: f64 = (1..=25).map(|n| 652.0 / 1.03f64.powi(n)).sum();
        let npv = npv_electricity(&[652.0; 25], &[0.0; 25], 0.0, &p).unwrap();
        assert_relative_eq!(npv, oracle, max_relative = 1e-12);
        assert!((npv - 11_353.0).abs() < 2.0);
        assert!((annuity_factor(0.03, 25) - 17.4131).abs() < 1e-4);
        assert!(npv_electricity(&[1.0; 3], &[1.0; 2], 0.0, &p).is_err());
    }

    #[test]
    fn gasoline_cash_flow() {
        let t = TransportParams::default();
        assert!((t.annual_gasoline_cost(1) - 652.0).abs() < 0.5);
        let p = FinanceParams::default();
        assert_eq!(npv_gasoline(&t, 0, &p), 0.0);
        let fleet: f64 = (1..=25).map(|n| 50.0 * t.annual_gasoline_cost(1) / 1.03f64.powi(n)).sum();
        assert_relative_eq!(npv_gasoline(&t, 50, &p), fleet, max_relative = 1e-12);
        assert!((npv_gasoline(&t, 50, &p) - 567_700.0).abs() < 500.0);
    }

    /// Root of -capex + Σ f/(1+d)^n by plain bisection on a wide bracket.
    fn irr_oracle(flows: &[f64], capex: f64) -> f64 {
        let (mut lo, mut hi) = (-0.5, 5.0);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if npv_at(flows, capex, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn irr_cases() {
        assert!((irr(&[110.0], 100.0).unwrap() - 0.10).abs() < 1e-5);
        let r = irr(&[50.0, 50.0, 50.0], 100.0).unwrap();
        assert!((r - irr_oracle(&[50.0, 50.0, 50.0], 100.0)).abs() < 1e-6);
        assert!((r - 0.2338).abs() < 1e-4);
        assert_eq!(irr(&[-5.0, 0.0, -1.0], 100.0), None);
    }

    #[test]
    fn payback_cases() {
        assert_eq!(spb(&[50.0; 5], 100.0), Some(2.0));
        let t = spb(&[30.0; 5], 100.0).unwrap();
        assert!((t - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(spb(&[0.0; 25], 100.0), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn zero_rate_is_plain_sum(flows in prop::collection::vec(-500.0f64..2000.0, 1..30), capex in 0.0f64..10_000.0) {
                let p = FinanceParams { discount_rate: 0.0, project_years: flows.len() as u32 };
                let zeros = vec![0.0; flows.len()];
                let npv = npv_electricity(&flows, &zeros, capex, &p).unwrap();
                let plain: f64 = flows.iter().sum::<f64>() - capex;
                prop_assert!((npv - plain).abs() <= 1e-9 * plain.abs().max(1.0));
            }

            #[test]
            fn npv_at_irr_vanishes(flows in prop::collection::vec(1.0f64..3000.0, 1..30), capex in 100.0f64..20_000.0) {
                if let Some(r) = irr(&flows, capex) {
                    prop_assert!(npv_at(&flows, capex, r).abs() < 1e-6 * capex);
                }
            }

            #[test]
            fn npv_decreases_with_rate(flows in prop::collection::vec(1.0f64..3000.0, 1..30), r in -0.5f64..1.0, dr in 0.001f64..0.5) {
                prop_assert!(npv_at(&flows, 0.0, r + dr) < npv_at(&flows, 0.0, r));
            }

            #[test]
            fn cost_log_linear(year in 2020i32..2060) {
                let s = TechnologyCostSchedule::default();
                let a = s.cost_at_year(CostComponent::Battery, year).unwrap().ln();
                let b = s.cost_at_year(CostComponent::Battery, year + 1).unwrap().ln();
                prop_assert!((a - b + 0.94f64.ln()).abs() < 1e-9);
            }
        }
    }
}
