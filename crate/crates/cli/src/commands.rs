//! Pipeline stage commands.

use std::path::{Path, PathBuf};

use rram_drift::config::seed_from_env;
use rram_drift::io::{read_json, to_json_pretty};
use rram_drift::mapper::map_clusters;
use rram_drift::model::{generate_synthetic, load_dataset, load_model, SyntheticSpec};
use rram_drift::partition::partition_model;
use rram_drift::profile::{classify_criticality, effective_eta, profile_spikes, raw_eta};
use rram_drift::simulate::{compare_modes, run_simulation, CompareContext, SimContext, SimOptions};
use rram_drift::{
    Clustering, CriticalityReport, Dataset, Environment, Error, Mapping, ReprogramPolicy, RunConfig, SnnModel,
    SpikeProfile,
};

use crate::output::write_atomic;
use crate::{
    CompareArgs, CriticalityArgs, GenerateArgs, MapArgs, PartitionArgs, ProfileArgs, SimulateArgs,
};

type Result<T> = std::result::Result<T, Error>;

/// Loads the config file, or the defaults when none is given. The flag tells
/// whether the file fixed the values, which decides if the crossbar size may
/// be taken from an upstream artifact instead.
pub fn load_config(path: Option<&PathBuf>) -> Result<(RunConfig, bool)> {
    match path {
        Some(p) => Ok((RunConfig::load(p)?, true)),
        None => Ok((RunConfig::default(), false)),
    }
}

/// Flag, then config, then `RRAM_DRIFT_SEED`, then 0.
fn seed(flag: Option<u64>, cfg: &RunConfig) -> Result<u64> {
    match flag {
        Some(s) => Ok(s),
        None => cfg.resolved_seed(),
    }
}

/// Adopts the crossbar size an upstream stage was built for, unless a
/// config file set one explicitly (a mismatch is then reported downstream).
fn adopt_crossbar(cfg: &mut RunConfig, explicit: bool, n: usize) {
    if !explicit {
        cfg.crossbar_n = n;
    }
}

fn inputs(model: &Path, dataset: &Path) -> Result<(SnnModel, Dataset)> {
    Ok((load_model(model)?, load_dataset(dataset)?))
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let seed = match a.seed {
        Some(s) => s,
        None => seed_from_env()?,
    };
    let spec = SyntheticSpec {
        layers: a.layers.clone(),
        num_samples: a.samples,
        max_input_spikes: a.max_input_spikes,
        seed,
    };
    if spec.num_samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    let (model, dataset) = generate_synthetic(&spec)?;
    write_atomic(&a.model_out, &model.to_json())?;
    write_atomic(&a.dataset_out, &to_json_pretty(&dataset))
}

pub fn profile(a: &ProfileArgs) -> Result<()> {
    let (model, dataset) = inputs(&a.model, &a.dataset)?;
    let profile = profile_spikes(&model, &dataset)?;
    write_atomic(&a.out, &to_json_pretty(&profile))
}

pub fn criticality(a: &CriticalityArgs) -> Result<()> {
    let (mut cfg, _) = load_config(a.config.as_ref())?;
    if let Some(t) = a.threshold {
        cfg.threshold = t;
    }
    cfg.validate()?;
    let (model, dataset) = inputs(&a.model, &a.dataset)?;
    let report = classify_criticality(&model, &dataset, cfg.threshold)?;
    log::info!("{} of {} synapses critical", report.num_critical(), report.critical.len());
    write_atomic(&a.out, &to_json_pretty(&report))
}

pub fn partition(a: &PartitionArgs) -> Result<()> {
    let (mut cfg, _) = load_config(a.config.as_ref())?;
    if let Some(n) = a.crossbar_n {
        cfg.crossbar_n = n;
    }
    cfg.validate()?;
    let seed = seed(a.seed, &cfg)?;
    let model = load_model(&a.model)?;
    let profile: SpikeProfile = read_json(&a.profile, "profile")?;
    check_profile(&profile, &model)?;
    let clustering = partition_model(&model, &profile, cfg.crossbar_n, seed)?;
    log::info!("{} clusters", clustering.clusters.len());
    write_atomic(&a.out, &to_json_pretty(&clustering))
}

pub fn map(a: &MapArgs) -> Result<()> {
    let (mut cfg, explicit) = load_config(a.config.as_ref())?;
    let model = load_model(&a.model)?;
    let clustering: Clustering = read_json(&a.clusters, "clusters")?;
    let profile: SpikeProfile = read_json(&a.profile, "profile")?;
    let crit: CriticalityReport = read_json(&a.criticality, "criticality")?;
    check_profile(&profile, &model)?;
    check_criticality(&crit, &model)?;
    adopt_crossbar(&mut cfg, explicit, clustering.crossbar_n);
    if let Some(m) = a.mode {
        cfg.mode = m.into();
    }
    cfg.validate()?;
    let seed = seed(a.seed, &cfg)?;
    let env = Environment::build(&cfg)?;
    let eff = effective_eta(&profile, &crit, cfg.epsilon)?;
    let raw = raw_eta(&profile, cfg.epsilon)?;
    let opts = cfg.map_options(cfg.mode, seed, env.params.pulse_width);
    let mapping = map_clusters(&model, &clustering, &eff, &raw, &env.table, &opts)?;
    log::info!("tRPI = {} inferences", mapping.trpi_inferences);
    write_atomic(&a.out, &to_json_pretty(&mapping))
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let (mut cfg, explicit) = load_config(a.config.as_ref())?;
    let mapping: Mapping = read_json(&a.mapping, "mapping")?;
    let (model, dataset) = inputs(&a.model, &a.dataset)?;
    adopt_crossbar(&mut cfg, explicit, mapping.crossbar_n);
    if let Some(len) = a.length {
        cfg.stream_length = len;
    }
    cfg.validate()?;
    let seed = seed(a.seed, &cfg)?;
    let policy = ReprogramPolicy::parse(&a.policy, Some(mapping.trpi_inferences))?;
    let profile = match &a.profile {
        Some(p) => read_json(p, "profile")?,
        None => profile_spikes(&model, &dataset)?,
    };
    check_profile(&profile, &model)?;
    let crit = match &a.criticality {
        Some(p) => read_json(p, "criticality")?,
        None => classify_criticality(&model, &dataset, cfg.threshold)?,
    };
    check_criticality(&crit, &model)?;
    let env = Environment::build(&cfg)?;
    let ctx = SimContext {
        model: &model,
        dataset: &dataset,
        mapping: &mapping,
        field: &env.field,
        params: &env.params,
        eta: &profile.eta,
        critical: Some(&crit.critical),
        cost: &cfg.cost,
    };
    let opts = SimOptions {
        policy,
        ..cfg.sim_options(seed)
    };
    let report = run_simulation(&ctx, &opts)?;
    log::info!(
        "{} drift events, {} reprograms, final accuracy {}",
        report.drift_events,
        report.reprogram_events,
        report.final_accuracy
    );
    write_atomic(&a.out, &to_json_pretty(&report))?;
    if let Some(path) = &a.timeline {
        write_atomic(path, &report.timeline_csv())?;
    }
    Ok(())
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let (cfg, _) = load_config(a.config.as_ref())?;
    let seed = seed(a.seed, &cfg)?;
    let (model, dataset) = inputs(&a.model, &a.dataset)?;
    let env = Environment::build(&cfg)?;
    let profile = profile_spikes(&model, &dataset)?;
    let crit = classify_criticality(&model, &dataset, cfg.threshold)?;
    let eff = effective_eta(&profile, &crit, cfg.epsilon)?;
    let raw = raw_eta(&profile, cfg.epsilon)?;
    let clustering = partition_model(&model, &profile, cfg.crossbar_n, seed)?;
    let ctx = CompareContext {
        model: &model,
        dataset: &dataset,
        clustering: &clustering,
        field: &env.field,
        table: &env.table,
        params: &env.params,
        eta: &profile.eta,
        effective_eta: &eff,
        raw_eta: &raw,
        critical: &crit.critical,
        cost: &cfg.cost,
    };
    let map_opts = cfg.map_options(cfg.mode, seed, env.params.pulse_width);
    let comparison = compare_modes(&ctx, &map_opts, &cfg.sim_options(seed))?;
    log::info!("overhead reduction {}", comparison.overhead_reduction);
    write_atomic(&a.out, &comparison.to_csv())?;
    if let Some(path) = &a.json {
        write_atomic(path, &to_json_pretty(&comparison))?;
    }
    Ok(())
}

fn check_profile(profile: &SpikeProfile, model: &SnnModel) -> Result<()> {
    if profile.num_synapses() != model.num_synapses() {
        return Err(Error::invalid(
            "profile.eta",
            format!("{} entries, model has {} synapses", profile.num_synapses(), model.num_synapses()),
        ));
    }
    Ok(())
}

fn check_criticality(crit: &CriticalityReport, model: &SnnModel) -> Result<()> {
    if crit.critical.len() != model.num_synapses() {
        return Err(Error::invalid(
            "criticality.critical",
            format!("{} entries, model has {} synapses", crit.critical.len(), model.num_synapses()),
        ));
    }
    Ok(())
}
