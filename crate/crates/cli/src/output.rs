//! CSV and JSON writers for command results.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use pvev_core::optimizer::{Evaluation, ModeComparison, SurfacePoint};
use pvev_core::HourRecord;

#[derive(Debug, Serialize)]
pub struct SummaryRow<'a> {
    pub label: &'a str,
    pub year: i32,
    pub p_kw: f64,
    pub b_kwh: f64,
    pub npv_total: f64,
    pub npv_electricity: f64,
    pub npv_gasoline: f64,
    pub capex: f64,
    pub irr: Option<f64>,
    pub spb_years: Option<f64>,
    pub es_pct: Option<f64>,
    pub ss_pct: Option<f64>,
    pub sc_pct: Option<f64>,
    pub cs_pct: Option<f64>,
    pub co2_reduction_pct: Option<f64>,
    pub emi_base_kg: Option<f64>,
    pub emi_system_kg: Option<f64>,
    pub load_kwh: f64,
    pub pv_kwh: f64,
    pub import_kwh: f64,
    pub export_kwh: f64,
    pub annual_base_cost: f64,
}

impl<'a> SummaryRow<'a> {
    pub fn new(label: &'a str, year: i32, e: &Evaluation) -> Self {
        let m = e.metrics;
        Self {
            label,
            year,
            p_kw: e.p_kw,
            b_kwh: e.b_kwh,
            npv_total: e.summary.npv_total,
            npv_electricity: e.summary.npv_electricity,
            npv_gasoline: e.summary.npv_gasoline,
            capex: e.summary.capex,
            irr: e.summary.irr,
            spb_years: e.summary.spb_years,
            es_pct: m.map(|m| m.es_pct),
            ss_pct: m.map(|m| m.ss_pct),
            sc_pct: m.map(|m| m.sc_pct),
            cs_pct: m.map(|m| m.cs_pct),
            co2_reduction_pct: m.map(|m| m.co2_reduction_pct),
            emi_base_kg: m.map(|m| m.emi_base_kg),
            emi_system_kg: m.map(|m| m.emi_system_kg),
            load_kwh: e.year1.load,
            pv_kwh: e.year1.pv,
            import_kwh: e.year1.import,
            export_kwh: e.year1.export,
            annual_base_cost: e.annual_base_cost,
        }
    }
}

#[derive(Debug, Serialize)]
struct TraceRow {
    hour: usize,
    load: f64,
    pv: f64,
    pv_to_load: f64,
    pv_to_batt: f64,
    batt_to_load: f64,
    import: f64,
    export: f64,
    soc: f64,
}

#[derive(Debug, Serialize)]
struct CashFlowRow {
    project_year: usize,
    cash_flow: f64,
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))
}

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<PathBuf> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r).with_context(|| format!("cannot write {}", path.display()))?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    std::fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path.to_path_buf())
}

pub fn write_trace(path: &Path, hours: &[HourRecord]) -> Result<PathBuf> {
    write_rows(
        path,
        hours.iter().enumerate().map(|(hour, r)| TraceRow {
            hour,
            load: r.load,
            pv: r.pv,
            pv_to_load: r.pv_to_load,
            pv_to_batt: r.pv_to_batt,
            batt_to_load: r.batt_to_load,
            import: r.import,
            export: r.export,
            soc: r.soc,
        }),
    )
}

pub fn write_cash_flows(path: &Path, e: &Evaluation) -> Result<PathBuf> {
    write_rows(
        path,
        e.summary.cash_flows.iter().enumerate().map(|(i, &cash_flow)| CashFlowRow { project_year: i + 1, cash_flow }),
    )
}

pub fn write_surface(path: &Path, surface: &[SurfacePoint]) -> Result<PathBuf> {
    write_rows(path, surface)
}

#[derive(Debug, Serialize)]
struct DeltaRow {
    quantity: &'static str,
    aggregated_minus_individual: f64,
}

pub fn write_deltas(path: &Path, c: &ModeComparison) -> Result<PathBuf> {
    let d = &c.deltas;
    write_rows(
        path,
        [
            ("npv", d.npv),
            ("npv_pct", d.npv_pct),
            ("sc_pct", d.sc_pct),
            ("ss_pct", d.ss_pct),
            ("cs_pct", d.cs_pct),
            ("co2_reduction_pct", d.co2_reduction_pct),
        ]
        .map(|(quantity, v)| DeltaRow { quantity, aggregated_minus_individual: v }),
    )
}
