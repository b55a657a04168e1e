//! End-to-end run on a generated network: profile, criticality, partition,
//! map in every mode, and simulate with reprogramming at the computed tRPI.
//!
//! cargo run --release -p rram-drift --example synthetic_pipeline -- 4,8,2 7

use std::time::Instant;

use rram_drift::config::{Environment, RunConfig};
use rram_drift::mapper::{map_clusters, MapMode};
use rram_drift::model::{generate_synthetic, SyntheticSpec};
use rram_drift::partition::partition_model;
use rram_drift::profile::{classify_criticality, effective_eta, profile_spikes, raw_eta};
use rram_drift::simulate::{auto_interval, run_simulation, ReprogramPolicy, SimContext, SimOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let layers: Vec<usize> = args
        .next()
        .unwrap_or_else(|| "4,8,2".into())
        .split(',')
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);

    let clock = Instant::now();
    let cfg = RunConfig::default();
    let env = Environment::build(&cfg)?;
    println!("environment built in {:.2?}", clock.elapsed());

    let (model, data) = generate_synthetic(&SyntheticSpec::new(layers, seed))?;
    let profile = profile_spikes(&model, &data)?;
    let crit = classify_criticality(&model, &data, cfg.threshold)?;
    let eff = effective_eta(&profile, &crit, cfg.epsilon)?;
    let raw = raw_eta(&profile, cfg.epsilon)?;
    println!(
        "{} synapses, {} critical, {:.2} spikes/image",
        model.num_synapses(),
        crit.num_critical(),
        profile.avg_spikes_per_image
    );
    let clustering = partition_model(&model, &profile, cfg.crossbar_n, seed)?;
    println!("{} clusters", clustering.clusters.len());

    for mode in [MapMode::Random, MapMode::Endurer, MapMode::Proposed] {
        let clock = Instant::now();
        let opts = cfg.map_options(mode, seed, env.params.pulse_width);
        let mapping = map_clusters(&model, &clustering, &eff, &raw, &env.table, &opts)?;
        let k = auto_interval(mapping.trpi_inferences);
        let ctx = SimContext {
            model: &model,
            dataset: &data,
            mapping: &mapping,
            field: &env.field,
            params: &env.params,
            eta: &profile.eta,
            critical: Some(&crit.critical),
            cost: &cfg.cost,
        };
        let sim = SimOptions {
            policy: ReprogramPolicy::Every(k),
            stream_length: 10 * k.min(100_000),
            seed,
            ..SimOptions::default()
        };
        let report = run_simulation(&ctx, &sim)?;
        println!(
            "{:>8}: tRPI {:.3} -> every {k}; drift {} (critical {}), accuracy {:.3}/{:.3}, overhead {:.4}, {:.2?}",
            mode.name(),
            mapping.trpi_inferences,
            report.drift_events,
            report.critical_drift_events,
            report.stream_accuracy,
            report.baseline_accuracy,
            report.overhead,
            clock.elapsed()
        );
    }
    Ok(())
}
