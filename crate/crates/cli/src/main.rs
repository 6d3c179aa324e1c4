use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pvev_core::ev_fleet::min_availability_experiment;
use pvev_core::fixtures::{synth_cf, synth_demand};
use pvev_core::manifest::{prepare_output_dir, RunManifest};
use pvev_core::optimizer::{
    average_evaluations, build_sites, compare_modes, evaluate, sweep, trajectory, year_one_trace, FixtureKind,
};
use pvev_core::profiles::{write_cf_csv, write_demand_csv};
use pvev_core::report::{report, Trajectory};
use pvev_core::scenario::{load_scenario_data, parse_scenario};
use pvev_core::{AnalysisMode, ScenarioConfig, ScenarioData};

mod output;

use output::{write_cash_flows, write_deltas, write_json, write_rows, write_surface, write_trace, SummaryRow};

const TOOL: &str = "pvev";

#[derive(Debug, Parser)]
#[command(name = TOOL, version, about = "PV, battery and EV-as-storage district scenarios")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "PVEV_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Residential,
    Commercial,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulates one configuration (capacities per house).
    Simulate {
        config: PathBuf,
        #[arg(long, default_value_t = 2020)]
        year: i32,
        #[arg(long)]
        pv_kw: f64,
        /// Ignored for EV scenarios, which use the fleet's V2H share.
        #[arg(long, default_value_t = 0.0)]
        battery_kwh: f64,
        /// Also writes the hourly flows of the first year.
        #[arg(long)]
        trace: bool,
    },
    /// Finds the NPV-maximising capacities for one start year.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        year: i32,
    },
    /// Sweeps several start years and tabulates the optima.
    Trajectory {
        config: PathBuf,
        /// `start:end:step` or a comma list.
        #[arg(long, default_value = "2020,2025,2030,2040")]
        years: String,
    },
    /// Runs the sweep in both analysis modes and reports the differences.
    Compare {
        config: PathBuf,
        #[arg(long)]
        year: i32,
    },
    /// Daytime availability statistics against fleet size.
    FleetExperiment {
        /// `start:end[:step]` or a comma list.
        #[arg(long, default_value = "1:100")]
        evs: String,
        #[arg(long, default_value_t = 1000)]
        days: usize,
        #[arg(long, default_value_t = 3)]
        trips: usize,
    },
    /// Writes synthetic demand and capacity-factor CSVs.
    SynthFixtures {
        #[arg(long, value_enum, default_value_t = Kind::Residential)]
        kind: Kind,
        #[arg(long, default_value_t = 50)]
        houses: usize,
        #[arg(long, default_value_t = pvev_core::fixtures::TARGET_CF)]
        target_cf: f64,
    },
    /// Tabulates trajectory JSON files written by `trajectory`.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "report")]
        stem: String,
    },
    /// Repeats the run recorded in a manifest.
    Rerun { manifest: PathBuf },
}

/// Parses `a:b[:s]` (inclusive) or `a,b,c`.
fn parse_range<T>(text: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr + Copy + PartialOrd + std::ops::Add<Output = T> + Default,
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let num = |s: &str| s.trim().parse::<T>().with_context(|| format!("bad number {s:?} in {text:?}"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let (a, b) = match parts.as_slice() {
            [a, b] | [a, b, _] => (num(a)?, num(b)?),
            _ => bail!("range must be start:end[:step], got {text:?}"),
        };
        let step = match parts.get(2) {
            Some(s) => num(s)?,
            None => {
                let one: T = "1".parse().ok().context("unit step")?;
                one
            }
        };
        if !(step > T::default()) || a > b {
            bail!("empty range {text:?}");
        }
        let mut out = Vec::new();
        let mut v = a;
        while v <= b {
            out.push(v);
            v = v + step;
        }
        Ok(out)
    } else {
        text.split(',').map(num).collect()
    }
}

/// State shared by every command: where to write and what to record.
struct Run {
    out: PathBuf,
    seed: Option<u64>,
    command: Vec<String>,
    /// Config recorded by an earlier run, used instead of re-reading the file.
    pinned: Option<ScenarioConfig>,
}

impl Run {
    fn manifest(&self, seed: u64) -> Result<RunManifest> {
        prepare_output_dir(&self.out)?;
        Ok(RunManifest::new(TOOL, env!("CARGO_PKG_VERSION"), self.command.clone(), seed, &self.out))
    }

    /// Resolves the scenario, writes the manifest, then loads the data.
    fn scenario(&self, path: &Path) -> Result<(ScenarioConfig, ScenarioData, RunManifest)> {
        let (mut cfg, defaults, warnings) = match &self.pinned {
            Some(c) => (c.clone(), BTreeMap::new(), Vec::new()),
            None => {
                let p = parse_scenario(path).with_context(|| format!("scenario {}", path.display()))?;
                (p.config, p.defaults, p.warnings)
            }
        };
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let mut m = self.manifest(cfg.seed)?;
        m.scenario_path = Some(path.to_path_buf());
        m.defaults = defaults;
        m.warnings = warnings;
        m.resolved_config = Some(cfg.clone());
        m.write()?;
        let base = path.parent().unwrap_or(Path::new("."));
        let data = load_scenario_data(&cfg, base)?;
        Ok((cfg, data, m))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn simulate(run: &Run, config: &Path, year: i32, pv_kw: f64, battery_kwh: f64, trace: bool) -> Result<Vec<PathBuf>> {
    let (cfg, data, mut m) = run.scenario(config)?;
    let sites = build_sites(&cfg, &data, cfg.mode)?;
    let evals = sites
        .iter()
        .map(|s| {
            let k = s.n_houses as f64;
            evaluate(&cfg, s, &data.cf, pv_kw * k, battery_kwh * k, year).map(|e| e.per_house(s.n_houses))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let best = match cfg.mode {
        AnalysisMode::Aggregated => evals[0].clone(),
        AnalysisMode::Individual => average_evaluations(&evals),
    };
    let mut written = vec![
        write_rows(&run.path("simulate.csv"), [SummaryRow::new("per_house", year, &best)])?,
        write_cash_flows(&run.path("cash_flows.csv"), &best)?,
        write_json(&run.path("simulate.json"), &best)?,
    ];
    if cfg.mode == AnalysisMode::Individual && sites.len() > 1 {
        let labels: Vec<String> = (1..=sites.len()).map(|i| format!("H{i:03}")).collect();
        let rows = labels.iter().zip(&evals).map(|(l, e)| SummaryRow::new(l, year, e));
        written.push(write_rows(&run.path("simulate_houses.csv"), rows)?);
    }
    if trace {
        for (i, s) in sites.iter().enumerate() {
            let k = s.n_houses as f64;
            let hours = year_one_trace(&cfg, s, &data.cf, pv_kw * k, battery_kwh * k, year)?;
            let name = match cfg.mode {
                AnalysisMode::Aggregated => "trace.csv".to_string(),
                AnalysisMode::Individual => format!("trace_H{:03}.csv", i + 1),
            };
            written.push(write_trace(&run.path(&name), &hours)?);
        }
    }
    m.finish()?;
    Ok(written)
}

fn sweep_cmd(run: &Run, config: &Path, year: i32) -> Result<Vec<PathBuf>> {
    let (cfg, data, mut m) = run.scenario(config)?;
    let r = sweep(&cfg, &data, year)?;
    let written = vec![
        write_rows(&run.path("best.csv"), [SummaryRow::new("per_house", year, &r.best)])?,
        write_surface(&run.path("surface.csv"), &r.surface)?,
        write_json(&run.path("sweep.json"), &r)?,
    ];
    m.finish()?;
    Ok(written)
}

fn trajectory_cmd(run: &Run, config: &Path, years: &str) -> Result<Vec<PathBuf>> {
    let years: Vec<i32> = parse_range(years)?;
    let (cfg, data, mut m) = run.scenario(config)?;
    let results = trajectory(&cfg, &data, &years)?;
    let name = if cfg.name.is_empty() {
        config.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned())
    } else {
        cfg.name.clone()
    };
    let t = Trajectory { name, technology: cfg.technology, fit: cfg.fit, mode: cfg.mode, costs: cfg.costs, results };
    let rows = t.results.iter().map(|r| SummaryRow::new("per_house", r.year, &r.best));
    let mut written = vec![write_rows(&run.path("trajectory_best.csv"), rows)?];
    written.push(write_json(&run.path("trajectory.json"), &t)?);
    let (csv, txt) = report(std::slice::from_ref(&t))?.write(&run.out, "trajectory")?;
    written.extend([csv, txt]);
    m.finish()?;
    Ok(written)
}

fn compare_cmd(run: &Run, config: &Path, year: i32) -> Result<Vec<PathBuf>> {
    let (cfg, data, mut m) = run.scenario(config)?;
    let c = compare_modes(&cfg, &data, year)?;
    let rows = [
        SummaryRow::new("individual", year, &c.individual.best),
        SummaryRow::new("aggregated", year, &c.aggregated.best),
    ];
    let written = vec![
        write_rows(&run.path("compare.csv"), rows)?,
        write_deltas(&run.path("compare_deltas.csv"), &c)?,
        write_json(&run.path("compare.json"), &c)?,
    ];
    m.finish()?;
    Ok(written)
}

fn fleet_cmd(run: &Run, evs: &str, days: usize, trips: usize) -> Result<Vec<PathBuf>> {
    let sizes: Vec<usize> = parse_range(evs)?;
    let seed = run.seed.unwrap_or(42);
    let mut m = run.manifest(seed)?;
    m.write()?;
    let rows = min_availability_experiment(&sizes, days, trips, seed)?;
    let written = vec![write_rows(&run.path("fleet_experiment.csv"), &rows)?];
    m.finish()?;
    Ok(written)
}

fn synth_cmd(run: &Run, kind: Kind, houses: usize, target_cf: f64) -> Result<Vec<PathBuf>> {
    let seed = run.seed.unwrap_or(42);
    let mut m = run.manifest(seed)?;
    m.write()?;
    let kind = match kind {
        Kind::Residential => FixtureKind::Residential,
        Kind::Commercial => FixtureKind::Commercial,
    };
    let demand = synth_demand(kind, houses, seed)?;
    let cf = synth_cf(seed, target_cf)?;
    let (dp, cp) = (run.path("demand.csv"), run.path("cf.csv"));
    let create = |p: &Path| std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()));
    write_demand_csv(std::io::BufWriter::new(create(&dp)?), &demand)?;
    write_cf_csv(std::io::BufWriter::new(create(&cp)?), &cf)?;
    m.finish()?;
    Ok(vec![dp, cp])
}

fn report_cmd(run: &Run, inputs: &[PathBuf], stem: &str) -> Result<Vec<PathBuf>> {
    let mut m = run.manifest(run.seed.unwrap_or(0))?;
    m.write()?;
    let trajectories = inputs
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str::<Trajectory>(&text).with_context(|| format!("{} is not a trajectory", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (csv, txt) = report(&trajectories)?.write(&run.out, stem)?;
    m.finish()?;
    Ok(vec![csv, txt])
}

fn execute(run: &Run, command: Command) -> Result<Vec<PathBuf>> {
    match command {
        Command::Simulate { config, year, pv_kw, battery_kwh, trace } => {
            simulate(run, &config, year, pv_kw, battery_kwh, trace)
        }
        Command::Sweep { config, year } => sweep_cmd(run, &config, year),
        Command::Trajectory { config, years } => trajectory_cmd(run, &config, &years),
        Command::Compare { config, year } => compare_cmd(run, &config, year),
        Command::FleetExperiment { evs, days, trips } => fleet_cmd(run, &evs, days, trips),
        Command::SynthFixtures { kind, houses, target_cf } => synth_cmd(run, kind, houses, target_cf),
        Command::Report { inputs, stem } => report_cmd(run, &inputs, &stem),
        Command::Rerun { .. } => bail!("a manifest cannot record a rerun"),
    }
}

/// Replays a manifest's command with its resolved seed and config.
fn rerun(out: PathBuf, manifest: &Path) -> Result<Vec<PathBuf>> {
    let m = RunManifest::read(manifest)?;
    let argv = std::iter::once(TOOL.to_string()).chain(m.command.iter().cloned());
    let cli = Cli::try_parse_from(argv).context("manifest command does not parse")?;
    let run = Run { out, seed: Some(m.seed), command: m.command.clone(), pinned: m.resolved_config };
    execute(&run, cli.command)
}

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let written = match cli.command {
        Command::Rerun { manifest } => rerun(cli.out, &manifest)?,
        command => {
            let run = Run { out: cli.out, seed: cli.seed, command: strip_out(&args), pinned: None };
            execute(&run, command)?
        }
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

/// Drops `--out` so that a replay can choose its own directory.
fn strip_out(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}
