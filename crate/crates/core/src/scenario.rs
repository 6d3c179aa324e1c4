//! Scenario files: strict TOML parsing, default tracking and data loading.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;
use toml::Value;

use crate::fixtures::{synth_cf_raw, synth_demand};
use crate::optimizer::{CfSource, DemandSource, OptimizerError, ScenarioConfig, ScenarioData, Technology};
use crate::profiles::{fill_gaps, load_cf_csv, load_demand_csv, HourlyProfile, ProfileError};
use crate::pv_model::{calibrate_cf, PvError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Invalid(#[from] OptimizerError),
    #[error("demand data: {0}")]
    Demand(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Pv(#[from] PvError),
}

impl ScenarioError {
    /// Dotted key path of the offending entry, when there is one.
    pub fn key_path(&self) -> Option<&str> {
        match self {
            ScenarioError::Schema { path, .. } => Some(path),
            ScenarioError::Invalid(OptimizerError::Config { path, .. }) => Some(path),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedScenario {
    pub config: ScenarioConfig,
    /// Key paths filled from defaults, with the value used.
    pub defaults: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

fn leaves(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Table(t) => {
            for (k, child) in t {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                leaves(&p, child, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

fn lookup<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(root, |v, k| v.get(k))
}

pub fn parse_scenario_str(text: &str) -> Result<ParsedScenario, ScenarioError> {
    let input: Value = toml::from_str(text).map_err(|e| ScenarioError::Schema {
        path: String::new(),
        message: e.message().to_string(),
    })?;
    let de = toml::Deserializer::new(text);
    let mut config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::Schema { path: if path == "." { String::new() } else { path }, message: e.inner().message().to_string() }
    })?;

    let mut warnings = Vec::new();
    if config.technology == Technology::PvPlusBattery && config.fleet.is_some() {
        warnings.push("fleet block ignored: technology is pv_plus_battery".to_string());
        config.fleet = None;
    }
    config.validate()?;

    let resolved = Value::try_from(&config).map_err(|e| ScenarioError::Schema {
        path: String::new(),
        message: e.to_string(),
    })?;
    let mut all = BTreeMap::new();
    leaves("", &resolved, &mut all);
    let defaults = all
        .into_iter()
        .filter(|(path, _)| lookup(&input, path).is_none())
        .map(|(path, v)| (path, v.to_string()))
        .collect();
    Ok(ParsedScenario { config, defaults, warnings })
}

pub fn parse_scenario(path: &Path) -> Result<ParsedScenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    parse_scenario_str(&text)
}

/// Serialises a config to TOML that parses back to the same config.
pub fn emit_scenario(config: &ScenarioConfig) -> String {
    toml::to_string(config).expect("scenario config is representable in TOML")
}

fn resolve(base_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

/// Demand profiles, gap-filled, for the first `n_houses` ids in sorted order.
pub fn load_demand(cfg: &ScenarioConfig, base_dir: &Path) -> Result<BTreeMap<String, HourlyProfile>, ScenarioError> {
    let n = cfg.district.n_houses;
    let all = match &cfg.district.demand {
        DemandSource::Synthetic { kind } => synth_demand(*kind, n, cfg.seed)?,
        DemandSource::Csv { path } => load_demand_csv(&resolve(base_dir, path))?,
    };
    if all.len() < n {
        return Err(ScenarioError::Demand(format!("{} houses in the data, {n} requested", all.len())));
    }
    all.into_iter().take(n).map(|(id, p)| Ok((id, fill_gaps(&p)?))).collect()
}

/// Capacity factor, gap-filled and calibrated when a target is set.
pub fn load_cf(cfg: &ScenarioConfig, base_dir: &Path) -> Result<HourlyProfile, ScenarioError> {
    let raw = match &cfg.pv.cf {
        CfSource::Synthetic => synth_cf_raw(cfg.seed)?,
        CfSource::Csv { path } => fill_gaps(&load_cf_csv(&resolve(base_dir, path))?)?,
    };
    if cfg.pv.target_cf > 0.0 {
        Ok(calibrate_cf(&raw, cfg.pv.target_cf)?)
    } else {
        Ok(raw)
    }
}

pub fn load_scenario_data(cfg: &ScenarioConfig, base_dir: &Path) -> Result<ScenarioData, ScenarioError> {
    let loads = load_demand(cfg, base_dir)?
        .values()
        .map(|p| p.dense())
        .collect::<Result<Vec<_>, _>>()?;
    let cf = load_cf(cfg, base_dir)?.dense()?;
    Ok(ScenarioData { loads, cf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{AnalysisMode, FleetSettings};

    const MINIMAL: &str = r#"
technology = "pv_plus_ev"
fit = false
mode = "aggregated"

[district]
n_houses = 50
"#;

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let p = parse_scenario_str(MINIMAL).unwrap();
        let c = &p.config;
        assert_eq!(c.finance.discount_rate, 0.03);
        assert_eq!(c.finance.project_years, 25);
        assert_eq!(c.storage.charge_efficiency, 0.95);
        assert_eq!(c.storage.discharge_efficiency, 0.95);
        assert_eq!(c.storage.degradation.calendar_rate, 0.01);
        assert_eq!(c.storage.degradation.cycle_rate, 0.00005);
        assert_eq!(p.defaults["finance.discount_rate"], "0.03");
        assert_eq!(p.defaults["storage.replacement_threshold"], "0.8");
        assert!(!p.defaults.contains_key("district.n_houses"));
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn negative_price_names_its_key() {
        let text = format!("{MINIMAL}\n[tariff]\nimport_price = -1.0\n");
        let e = parse_scenario_str(&text).unwrap_err();
        assert_eq!(e.key_path(), Some("tariff.import_price"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let text = format!("{MINIMAL}\n[finance]\ndiscount = 0.05\n");
        let e = parse_scenario_str(&text).unwrap_err();
        assert_eq!(e.key_path(), Some("finance.discount"));
        assert!(e.to_string().contains("discount"), "{e}");
        let e = parse_scenario_str("technology = \"pv_plus_ev\"\nfit = false\n").unwrap_err();
        assert!(e.to_string().contains("district") || e.to_string().contains("mode"), "{e}");
    }

    #[test]
    fn fleet_with_battery_technology_warns() {
        let text = "technology = \"pv_plus_battery\"\nfit = true\nmode = \"individual\"\n[district]\nn_houses = 2\n[fleet]\nev_per_house = 1\n";
        let p = parse_scenario_str(text).unwrap();
        assert_eq!(p.warnings.len(), 1);
        assert!(p.config.fleet.is_none());
    }

    #[test]
    fn emit_then_parse_round_trips() {
        let mut c = ScenarioConfig::residential(7, Technology::PvPlusEv, true, AnalysisMode::Individual);
        c.storage.power_limit_kw = Some(3.5);
        c.fleet = Some(FleetSettings { ev_per_house: 2, ..Default::default() });
        c.district.demand = DemandSource::Csv { path: "data/demand.csv".into() };
        c.costs.replacement = crate::finance::ReplacementPricing::Fixed(300.0);
        c.seed = 99;
        let back = parse_scenario_str(&emit_scenario(&c)).unwrap();
        assert_eq!(back.config, c);
        assert!(back.defaults.is_empty(), "{:?}", back.defaults);
    }

    #[test]
    fn synthetic_data_loads() {
        let mut p = parse_scenario_str(MINIMAL).unwrap().config;
        p.district.n_houses = 3;
        let d = load_scenario_data(&p, Path::new(".")).unwrap();
        assert_eq!(d.loads.len(), 3);
        assert!((d.cf.iter().sum::<f64>() / d.cf.len() as f64 - 0.135).abs() <= 1e-4);
    }
}
