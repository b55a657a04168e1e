//! Hot paths: nodal solve, max-min placement, inference, and drift streams.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rram_drift::circuit::{solve_nodal, CrossbarConfig, NodalOptions, TechNodeParams};
use rram_drift::mapper::{build_instance, map_clusters, solve_maxmin, MapMode};
use rram_drift::model::{generate_synthetic, SyntheticSpec};
use rram_drift::partition::partition_model;
use rram_drift::profile::{profile_spikes, raw_eta};
use rram_drift::simulate::{auto_interval, run_simulation, ReprogramPolicy, SimContext, SimOptions};
use rram_drift::{Environment, RunConfig};

fn nodal(c: &mut Criterion) {
    let config = CrossbarConfig {
        n: 32,
        tech: TechNodeParams::nm65(),
        r_cell_by_level: vec![10_000.0],
        v_drive: 0.5,
    };
    let cells = vec![10_000.0; 32 * 32];
    let active = vec![true; 32];
    c.bench_function("nodal_32x32", |b| {
        b.iter(|| solve_nodal(black_box(&config), &cells, &active, &NodalOptions::default()).unwrap())
    });
}

fn maxmin(c: &mut Criterion) {
    let (model, data) = generate_synthetic(&SyntheticSpec::new(vec![16, 16], 1)).unwrap();
    let profile = profile_spikes(&model, &data).unwrap();
    let eta = raw_eta(&profile, 1e-6).unwrap();
    let env = Environment::build(&RunConfig { crossbar_n: 16, ..RunConfig::default() }).unwrap();
    let clustering = partition_model(&model, &profile, 16, 1).unwrap();
    let inst = build_instance(&clustering.clusters[0], &model, &eta, &env.table, env.params.pulse_width).unwrap();
    let mut group = c.benchmark_group("solve_maxmin");
    group.sample_size(20);
    group.bench_function("16x16", |b| b.iter(|| solve_maxmin(black_box(&inst), 7, None)));
    group.finish();
}

fn inference(c: &mut Criterion) {
    let (model, data) = generate_synthetic(&SyntheticSpec::new(vec![64, 128, 10], 2)).unwrap();
    let input = &data.samples[0].inputs;
    c.bench_function("inference_64_128_10", |b| b.iter(|| model.run_inference(black_box(input)).unwrap()));
}

fn stream(c: &mut Criterion) {
    let (model, data) = generate_synthetic(&SyntheticSpec::new(vec![4, 8, 2], 3)).unwrap();
    let cfg = RunConfig { crossbar_n: 16, ..RunConfig::default() };
    let env = Environment::build(&cfg).unwrap();
    let profile = profile_spikes(&model, &data).unwrap();
    let eta = raw_eta(&profile, cfg.epsilon).unwrap();
    let clustering = partition_model(&model, &profile, 16, 3).unwrap();
    let opts = cfg.map_options(MapMode::Endurer, 3, env.params.pulse_width);
    let mapping = map_clusters(&model, &clustering, &eta, &eta, &env.table, &opts).unwrap();
    let ctx = SimContext {
        model: &model,
        dataset: &data,
        mapping: &mapping,
        field: &env.field,
        params: &env.params,
        eta: &profile.eta,
        critical: None,
        cost: &cfg.cost,
    };
    let k = auto_interval(mapping.trpi_inferences);
    let mut group = c.benchmark_group("simulate");
    for (name, policy) in [("never", ReprogramPolicy::Never), ("auto", ReprogramPolicy::Every(k))] {
        let sim = SimOptions { policy, stream_length: 1_000_000, ..cfg.sim_options(3) };
        group.bench_function(format!("1e6_inferences_{name}"), |b| b.iter(|| run_simulation(black_box(&ctx), &sim).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, nodal, maxmin, inference, stream);
criterion_main!(benches);
