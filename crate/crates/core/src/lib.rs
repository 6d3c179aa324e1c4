//! Residential and commercial PV, battery and EV-as-storage simulation with
//! techno-economic evaluation.
//!
//! Hourly profiles feed a greedy self-consumption dispatch, the resulting
//! flows are priced over the project life, and a grid sweep picks the
//! capacities with the highest NPV.

pub mod dispatch;
pub mod ev_fleet;
pub mod finance;
pub mod fixtures;
pub mod manifest;
pub mod metrics;
pub mod optimizer;
pub mod profiles;
pub mod pv_model;
pub mod report;
pub mod scenario;

pub use dispatch::{
    simulate_hours, simulate_year, Degradation, DispatchResult, EnergyTotals, HourRecord, StorageConfig, StorageKind,
    Tariff,
};
pub use ev_fleet::{FleetConfig, FleetMode, TripSchedule};
pub use finance::{FinanceParams, FinancialSummary, TechnologyCostSchedule, TransportParams};
pub use manifest::RunManifest;
pub use metrics::{EmissionFactors, MetricsRow};
pub use optimizer::{AnalysisMode, Evaluation, ScenarioConfig, ScenarioData, SweepResult, Technology};
pub use profiles::{HourlyProfile, UnitTag, HOURS_PER_YEAR};
pub use pv_model::PvConfig;
pub use report::{Report, Trajectory};
pub use scenario::{parse_scenario, ParsedScenario};
