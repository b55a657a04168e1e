#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rram_drift::config::{Environment, RunConfig};
use rram_drift::mapper::{
    map_clusters, InstanceSynapse, LifetimeInstance, MapMode, Mapping, TransitionTable,
};
use rram_drift::model::{generate_synthetic, Dataset, Neuron, NeuronKind, Sample, SnnModel, Synapse, SyntheticSpec};
use rram_drift::partition::{partition_model, Clustering};
use rram_drift::profile::{
    classify_criticality, effective_eta, profile_spikes, raw_eta, CriticalityReport, SpikeProfile,
};
use rram_drift::simulate::{run_simulation, ReprogramPolicy, SimContext, SimOptions, SimulationReport};

/// Dense `m x n` placement problem on a `ports`-sized crossbar with random
/// transition times in [1, 10) s and spike counts in [0.1, 5).
pub fn random_instance(m: usize, n: usize, ports: usize, seed: u64) -> LifetimeInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = 3;
    let seconds = (0..ports * ports * levels).map(|_| rng.gen_range(1.0..10.0)).collect();
    let table = TransitionTable::from_values(ports, levels, seconds).unwrap();
    let mut synapses = Vec::new();
    for i in 0..m {
        for k in 0..n {
            synapses.push(InstanceSynapse {
                id: synapses.len() as u32,
                pre: i,
                post: k,
                level: rng.gen_range(0..3),
                eta: rng.gen_range(0.1..5.0),
            });
        }
    }
    LifetimeInstance::new((0..m as u32).collect(), (0..n as u32).collect(), synapses, table, 1e-3).unwrap()
}

/// Every row injection crossed with every column injection.
pub fn brute_force_tau(inst: &LifetimeInstance) -> f64 {
    let rows = injections(inst.num_rows(), inst.ports());
    let cols = injections(inst.num_cols(), inst.ports());
    let mut best = f64::NEG_INFINITY;
    for r in &rows {
        for c in &cols {
            let tau = inst
                .synapses
                .iter()
                .enumerate()
                .map(|(s, syn)| inst.lifetime(s, r[syn.pre], c[syn.post]))
                .fold(f64::INFINITY, f64::min);
            if tau > best {
                best = tau;
            }
        }
    }
    best
}

fn injections(len: usize, ports: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for prefix in &out {
            for p in (0..ports).filter(|p| !prefix.contains(p)) {
                let mut longer = prefix.clone();
                longer.push(p);
                next.push(longer);
            }
        }
        out = next;
    }
    out
}

/// Two inputs, two outputs; `in0 -> out1` starts in the high-resistance
/// state (weight -1) and is the only synapse that can still drift. Once it
/// moves up, sample `(3, 4)` flips from class 0 to class 1.
pub fn adversarial() -> (SnnModel, Dataset) {
    let neurons = vec![
        Neuron { id: 0, kind: NeuronKind::Input, threshold: 1.0 },
        Neuron { id: 1, kind: NeuronKind::Input, threshold: 1.0 },
        Neuron { id: 2, kind: NeuronKind::Output, threshold: 1.0 },
        Neuron { id: 3, kind: NeuronKind::Output, threshold: 1.0 },
    ];
    let synapses = vec![
        Synapse { id: 0, pre: 0, post: 2, level: 2 },
        Synapse { id: 1, pre: 0, post: 3, level: 0 },
        Synapse { id: 2, pre: 1, post: 3, level: 2 },
    ];
    let model = SnnModel::new(neurons, synapses).unwrap();
    let data = Dataset {
        num_classes: 2,
        samples: vec![
            Sample { inputs: vec![5, 0], label: 0 },
            Sample { inputs: vec![0, 5], label: 1 },
            Sample { inputs: vec![3, 4], label: 0 },
        ],
    };
    (model, data)
}

/// Every stage up to mapping, for one model and configuration.
pub struct Pipeline {
    pub cfg: RunConfig,
    pub env: Environment,
    pub model: SnnModel,
    pub data: Dataset,
    pub profile: SpikeProfile,
    pub crit: CriticalityReport,
    pub eff: Vec<f64>,
    pub raw: Vec<f64>,
    pub clustering: Clustering,
}

impl Pipeline {
    pub fn new(model: SnnModel, data: Dataset, cfg: RunConfig, seed: u64) -> Self {
        let env = Environment::build(&cfg).unwrap();
        let profile = profile_spikes(&model, &data).unwrap();
        let crit = classify_criticality(&model, &data, cfg.threshold).unwrap();
        let eff = effective_eta(&profile, &crit, cfg.epsilon).unwrap();
        let raw = raw_eta(&profile, cfg.epsilon).unwrap();
        let clustering = partition_model(&model, &profile, cfg.crossbar_n, seed).unwrap();
        Self { cfg, env, model, data, profile, crit, eff, raw, clustering }
    }

    pub fn synthetic(layers: &[usize], seed: u64) -> Self {
        let (model, data) = generate_synthetic(&SyntheticSpec::new(layers.to_vec(), seed)).unwrap();
        Self::new(model, data, RunConfig::default(), seed)
    }

    pub fn map(&self, mode: MapMode, seed: u64) -> Mapping {
        let opts = self.cfg.map_options(mode, seed, self.env.params.pulse_width);
        map_clusters(&self.model, &self.clustering, &self.eff, &self.raw, &self.env.table, &opts).unwrap()
    }

    pub fn simulate(&self, mapping: &Mapping, policy: ReprogramPolicy, length: u64, seed: u64) -> SimulationReport {
        let ctx = SimContext {
            model: &self.model,
            dataset: &self.data,
            mapping,
            field: &self.env.field,
            params: &self.env.params,
            eta: &self.profile.eta,
            critical: Some(&self.crit.critical),
            cost: &self.cfg.cost,
        };
        let opts = SimOptions {
            policy,
            stream_length: length,
            seed,
            ..self.cfg.sim_options(seed)
        };
        run_simulation(&ctx, &opts).unwrap()
    }
}
