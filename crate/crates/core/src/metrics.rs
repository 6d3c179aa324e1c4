//! Energy indices, cost saving and CO₂ accounting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::EnergyTotals;
use crate::finance::{FinancialSummary, TransportParams};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("annual load is zero")]
    ZeroLoad,
    #[error("annual base cost is zero")]
    ZeroBaseCost,
    #[error("base emissions are zero")]
    ZeroBaseEmissions,
}

/// kg CO₂ per kWh imported and per litre of gasoline burned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmissionFactors {
    pub grid_kg_per_kwh: f64,
    pub gasoline_kg_per_l: f64,
}

impl EmissionFactors {
    pub const SHINCHI_GRID: f64 = 0.522;
    pub const KYOTO_GRID: f64 = 0.352;
    pub const GASOLINE: f64 = 2.3;

    pub fn shinchi() -> Self {
        Self { grid_kg_per_kwh: Self::SHINCHI_GRID, gasoline_kg_per_l: Self::GASOLINE }
    }

    pub fn kyoto() -> Self {
        Self { grid_kg_per_kwh: Self::KYOTO_GRID, gasoline_kg_per_l: Self::GASOLINE }
    }
}

impl Default for EmissionFactors {
    fn default() -> Self {
        Self::shinchi()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyIndices {
    pub es_pct: f64,
    pub ss_pct: f64,
    pub sc_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Emissions {
    pub emi_base_kg: f64,
    pub emi_system_kg: f64,
    pub reduction_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsRow {
    pub es_pct: f64,
    pub ss_pct: f64,
    pub sc_pct: f64,
    pub cs_pct: f64,
    pub co2_reduction_pct: f64,
    pub emi_base_kg: f64,
    pub emi_system_kg: f64,
}

impl MetricsRow {
    pub fn new(idx: EnergyIndices, cs_pct: f64, emi: Emissions) -> Self {
        Self {
            es_pct: idx.es_pct,
            ss_pct: idx.ss_pct,
            sc_pct: idx.sc_pct,
            cs_pct,
            co2_reduction_pct: emi.reduction_pct,
            emi_base_kg: emi.emi_base_kg,
            emi_system_kg: emi.emi_system_kg,
        }
    }
}

/// ES, SS and SC in percent. SC is 100 when there is no PV.
pub fn energy_indices(flows: &EnergyTotals) -> Result<EnergyIndices, MetricsError> {
    if !(flows.load > 0.0) {
        return Err(MetricsError::ZeroLoad);
    }
    let served = flows.pv_to_load + flows.batt_to_load;
    let sc_pct = if flows.pv > 0.0 { served / flows.pv * 100.0 } else { 100.0 };
    Ok(EnergyIndices { es_pct: flows.pv / flows.load * 100.0, ss_pct: served / flows.load * 100.0, sc_pct })
}

/// Annualised project NPV as a share of the yearly cost without the system.
pub fn cost_saving(summary: &FinancialSummary, annual_base_cost: f64, years: u32) -> Result<f64, MetricsError> {
    if annual_base_cost == 0.0 {
        return Err(MetricsError::ZeroBaseCost);
    }
    Ok(summary.npv_total / years as f64 / annual_base_cost * 100.0)
}

/// Yearly emissions before and after. With `include_gasoline` the baseline
/// also burns fuel for `n_vehicles` ICE cars.
pub fn co2(
    base_import_kwh: f64,
    system_import_kwh: f64,
    factors: &EmissionFactors,
    transport: &TransportParams,
    n_vehicles: usize,
    include_gasoline: bool,
) -> Result<Emissions, MetricsError> {
    let mut emi_base_kg = factors.grid_kg_per_kwh * base_import_kwh;
    if include_gasoline {
        emi_base_kg += transport.annual_litres(n_vehicles) * factors.gasoline_kg_per_l;
    }
    if !(emi_base_kg > 0.0) {
        return Err(MetricsError::ZeroBaseEmissions);
    }
    let emi_system_kg = factors.grid_kg_per_kwh * system_import_kwh;
    Ok(Emissions { emi_base_kg, emi_system_kg, reduction_pct: (1.0 - emi_system_kg / emi_base_kg) * 100.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flows(pv: f64, pv_to_load: f64, batt_to_load: f64, load: f64) -> EnergyTotals {
        EnergyTotals { pv, pv_to_load, batt_to_load, load, ..Default::default() }
    }

    #[test]
    fn index_arithmetic() {
        let i = energy_indices(&flows(100.0, 30.0, 20.0, 80.0)).unwrap();
        assert!((i.sc_pct - 50.0).abs() < 1e-12);
        assert!((i.ss_pct - 62.5).abs() < 1e-12);
        assert!((i.es_pct - 125.0).abs() < 1e-12);
        assert_eq!(energy_indices(&flows(1.0, 1.0, 0.0, 0.0)), Err(MetricsError::ZeroLoad));
    }

    #[test]
    fn pv_below_load_without_storage() {
        let i = energy_indices(&flows(40.0, 40.0, 0.0, 90.0)).unwrap();
        assert_eq!(i.sc_pct, 100.0);
        assert_eq!(i.ss_pct, i.es_pct);
        assert_eq!(energy_indices(&flows(0.0, 0.0, 0.0, 5.0)).unwrap().sc_pct, 100.0);
    }

    fn summary(npv_total: f64) -> FinancialSummary {
        FinancialSummary {
            npv_total,
            npv_electricity: npv_total,
            npv_gasoline: 0.0,
            irr: None,
            spb_years: None,
            capex: 0.0,
            cash_flows: vec![],
        }
    }

    #[test]
    fn cost_saving_cases() {
        assert_eq!(cost_saving(&summary(0.0), 1953.0, 25).unwrap(), 0.0);
        let cs = cost_saving(&summary(14_826.0), 1301.0 + 652.0, 25).unwrap();
        assert!((cs - 30.0).abs() < 0.5);
        let double = cost_saving(&summary(2.0 * 14_826.0), 1953.0, 25).unwrap();
        assert!((double - 2.0 * cs).abs() < 1e-9);
        assert_eq!(cost_saving(&summary(1.0), 0.0, 25), Err(MetricsError::ZeroBaseCost));
    }

    #[test]
    fn shinchi_emissions() {
        let t = TransportParams::default();
        let e = co2(5915.0, 5915.0, &EmissionFactors::shinchi(), &t, 1, true).unwrap();
        assert!((e.emi_base_kg - 4250.0).abs() < 5.0);
        let none = co2(5915.0, 5915.0, &EmissionFactors::shinchi(), &t, 0, false).unwrap();
        assert!(none.reduction_pct.abs() < 1e-12);
        let sys = co2(5915.0, 500.0, &EmissionFactors::shinchi(), &t, 1, true).unwrap();
        assert!((sys.emi_system_kg - 261.0).abs() < 0.5);
        assert!((sys.reduction_pct - 93.9).abs() < 0.1);
        let zero = co2(5915.0, 0.0, &EmissionFactors::shinchi(), &t, 1, true).unwrap();
        assert_eq!(zero.reduction_pct, 100.0);
        assert_eq!(
            co2(0.0, 0.0, &EmissionFactors::kyoto(), &t, 0, false),
            Err(MetricsError::ZeroBaseEmissions)
        );
    }
}
