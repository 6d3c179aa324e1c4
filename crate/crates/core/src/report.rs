//! Year-by-scenario result tables, as CSV and as aligned text.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finance::{CostComponent, FinanceError, TechnologyCostSchedule};
use crate::optimizer::{AnalysisMode, Evaluation, SweepResult, Technology};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to report")]
    Empty,
    #[error("trajectories cover different years: {0:?} vs {1:?}")]
    YearMismatch(Vec<i32>, Vec<i32>),
    #[error(transparent)]
    Finance(#[from] FinanceError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Optimal configurations of one scenario over several start years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub name: String,
    pub technology: Technology,
    pub fit: bool,
    pub mode: AnalysisMode,
    pub costs: TechnologyCostSchedule,
    pub results: Vec<SweepResult>,
}

impl Trajectory {
    pub fn years(&self) -> Vec<i32> {
        self.results.iter().map(|r| r.year).collect()
    }

    fn conditions(&self) -> [&'static str; 3] {
        [
            match self.technology {
                Technology::PvPlusBattery => "PV (+battery)",
                Technology::PvPlusEv => "PV + EV",
            },
            if self.fit { "w/ FIT" } else { "w/o FIT" },
            match self.mode {
                AnalysisMode::Individual => "Indiv.",
                AnalysisMode::Aggregated => "Agg.",
            },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Style {
    Money,
    Price,
    Capacity,
    Percent,
    Years,
}

struct Row {
    item: &'static str,
    conditions: [&'static str; 3],
    values: Vec<Option<f64>>,
    style: Style,
}

type Getter = fn(&Evaluation) -> Option<f64>;

const ITEMS: [(&str, Style, Getter); 10] = [
    ("PV capacity (kW)", Style::Capacity, |e| Some(e.p_kw)),
    ("Battery capacity (kWh)", Style::Capacity, |e| Some(e.b_kwh)),
    ("NPV ($)", Style::Money, |e| Some(e.summary.npv_total)),
    ("Self-consumption (%)", Style::Percent, |e| e.metrics.map(|m| m.sc_pct)),
    ("Self-sufficiency (%)", Style::Percent, |e| e.metrics.map(|m| m.ss_pct)),
    ("Energy sufficiency (%)", Style::Percent, |e| e.metrics.map(|m| m.es_pct)),
    ("Cost saving (%)", Style::Percent, |e| e.metrics.map(|m| m.cs_pct)),
    ("CO2 reduction (%)", Style::Percent, |e| e.metrics.map(|m| m.co2_reduction_pct)),
    ("SPB (years)", Style::Years, |e| e.summary.spb_years),
    ("IRR (%)", Style::Percent, |e| e.summary.irr.map(|r| 100.0 * r)),
];

/// Rendered report: full-precision CSV and a rounded text table.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub csv: String,
    pub table: String,
}

fn build_rows(trajectories: &[Trajectory]) -> Result<(Vec<i32>, Vec<Row>), ReportError> {
    let first = trajectories.first().ok_or(ReportError::Empty)?;
    let years = first.years();
    if years.is_empty() {
        return Err(ReportError::Empty);
    }
    for t in trajectories {
        if t.years() != years {
            return Err(ReportError::YearMismatch(years, t.years()));
        }
    }
    let all = ["All", "All", "All"];
    let cost_row = |item, component, scale: f64, style| -> Result<Row, ReportError> {
        let values = years
            .iter()
            .map(|&y| Ok(Some(first.costs.cost_at_year(component, y)? * scale)))
            .collect::<Result<Vec<_>, FinanceError>>()?;
        Ok(Row { item, conditions: all, values, style })
    };
    let mut rows = vec![
        cost_row("PV cost ($/W)", CostComponent::Pv, 1e-3, Style::Price)?,
        cost_row("Battery cost ($/kWh)", CostComponent::Battery, 1.0, Style::Money)?,
        cost_row("EV additional ($/kWh)", CostComponent::EvAdd, 1.0, Style::Money)?,
    ];
    for (item, style, get) in ITEMS {
        for t in trajectories {
            rows.push(Row {
                item,
                conditions: t.conditions(),
                values: t.results.iter().map(|r| get(&r.best)).collect(),
                style,
            });
        }
    }
    Ok((years, rows))
}

fn rounded(v: Option<f64>, style: Style) -> String {
    match v {
        None => "-".to_string(),
        Some(x) => match style {
            Style::Price => format!("{x:.2}"),
            Style::Capacity | Style::Years => format!("{x:.1}"),
            Style::Money | Style::Percent => format!("{:.0}", x.round() + 0.0),
        },
    }
}

pub fn report(trajectories: &[Trajectory]) -> Result<Report, ReportError> {
    let (years, rows) = build_rows(trajectories)?;

    let mut csv = String::from("item,condition1,condition2,condition3");
    for y in &years {
        write!(csv, ",y{y}").unwrap();
    }
    csv.push('\n');
    for r in &rows {
        write!(csv, "{},{},{},{}", r.item, r.conditions[0], r.conditions[1], r.conditions[2]).unwrap();
        for v in &r.values {
            match v {
                Some(x) => write!(csv, ",{x}").unwrap(),
                None => csv.push(','),
            }
        }
        csv.push('\n');
    }

    let mut cells: Vec<Vec<String>> = vec![["Items", "Condition 1", "Condition 2", "Condition 3"]
        .iter()
        .map(|s| s.to_string())
        .chain(years.iter().map(|y| y.to_string()))
        .collect()];
    for r in &rows {
        cells.push(
            std::iter::once(r.item.to_string())
                .chain(r.conditions.iter().map(|s| s.to_string()))
                .chain(r.values.iter().map(|v| rounded(*v, r.style)))
                .collect(),
        );
    }
    let widths: Vec<usize> = (0..cells[0].len()).map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0)).collect();
    let mut table = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| if c < 4 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        table.push_str(line.join("  ").trim_end());
        table.push('\n');
    }
    Ok(Report { csv, table })
}

impl Report {
    /// Writes `<stem>.csv` and `<stem>.txt` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), ReportError> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let txt_path = dir.join(format!("{stem}.txt"));
        for (p, body) in [(&csv_path, &self.csv), (&txt_path, &self.table)] {
            std::fs::write(p, body).map_err(|source| ReportError::Io { path: p.clone(), source })?;
        }
        Ok((csv_path, txt_path))
    }
}
