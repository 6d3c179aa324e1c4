use criterion::{black_box, criterion_group, criterion_main, Criterion};

use pvev_core::fixtures::{synth_cf, synth_demand, TARGET_CF};
use pvev_core::optimizer::{sweep, FixtureKind};
use pvev_core::{simulate_hours, AnalysisMode, ScenarioConfig, ScenarioData, StorageConfig, Tariff, Technology};

fn data(n: usize) -> ScenarioData {
    let loads = synth_demand(FixtureKind::Residential, n, 1)
        .unwrap()
        .values()
        .map(|p| p.dense().unwrap())
        .collect();
    ScenarioData { loads, cf: synth_cf(1, TARGET_CF).unwrap().dense().unwrap() }
}

fn simulate_year(c: &mut Criterion) {
    let d = data(1);
    let pv: Vec<f64> = d.cf.iter().map(|x| 5.0 * x).collect();
    let storage = StorageConfig::stationary(10.0, pv.len());
    let tariff = Tariff { import_price: 0.22, export_price: 0.09 };
    c.bench_function("simulate_year_8760h", |b| {
        b.iter(|| simulate_hours(black_box(&d.loads[0]), black_box(&pv), &storage, &tariff, 1.0, 0.0).unwrap())
    });
}

fn sweep_grid(c: &mut Criterion) {
    let d = data(10);
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    for (label, tech) in [("battery_agg_10", Technology::PvPlusBattery), ("ev_agg_10", Technology::PvPlusEv)] {
        let cfg = ScenarioConfig::residential(10, tech, false, AnalysisMode::Aggregated);
        g.bench_function(label, |b| b.iter(|| sweep(&cfg, &d, 2030).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, simulate_year, sweep_grid);
criterion_main!(benches);
