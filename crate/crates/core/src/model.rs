//! Spiking network data model, ternary level encoding and rate-based inference.
//!
//! A model is a feedforward graph of neurons joined by synapses whose weights
//! are stored as resistance levels. Inference is deterministic and works on
//! spike counts: each non-input neuron emits
//! `clamp(floor(max(0, sum(w * count)) / threshold), 0, r_max)` spikes, and every
//! synapse carries exactly the spikes emitted by its pre-synaptic neuron.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on spikes a neuron may emit per inference.
pub const DEFAULT_R_MAX: u32 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronKind {
    Input,
    Hidden,
    Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neuron {
    pub id: u32,
    pub kind: NeuronKind,
    /// Spike-count threshold, strictly positive.
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Synapse {
    pub id: u32,
    pub pre: u32,
    pub post: u32,
    pub level: u8,
}

/// Maps stored resistance levels to signed weights.
///
/// Level 0 is the high-resistance state. Weights decode as `level - 1`, so the
/// default three levels give the ternary set {-1, 0, +1}. Drift that pushes a
/// level past either end is clamped, which is what makes a +1 synapse immune
/// to further conductance increase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelEncoding {
    pub num_levels: u8,
}

impl Default for LevelEncoding {
    fn default() -> Self {
        Self { num_levels: 3 }
    }
}

impl LevelEncoding {
    pub fn max_level(&self) -> u8 {
        self.num_levels - 1
    }

    pub fn decode(&self, level: u8) -> i64 {
        i64::from(level) - 1
    }

    pub fn clamp(&self, level: i64) -> u8 {
        level.clamp(0, i64::from(self.max_level())) as u8
    }
}

/// Validated feedforward spiking network.
#[derive(Debug, Clone, PartialEq)]
pub struct SnnModel {
    neurons: Vec<Neuron>,
    /// Sorted by id; synapse ids are dense so position == id.
    synapses: Vec<Synapse>,
    encoding: LevelEncoding,
    r_max: u32,
    topo: Vec<u32>,
    inputs: Vec<u32>,
    outputs: Vec<u32>,
    /// Incoming synapse positions per neuron.
    fan_in: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub per_synapse_spikes: Vec<u32>,
    pub output_counts: Vec<u32>,
    pub predicted: usize,
}

impl SnnModel {
    pub fn new(neurons: Vec<Neuron>, synapses: Vec<Synapse>) -> Result<Self> {
        Self::with_encoding(neurons, synapses, LevelEncoding::default(), DEFAULT_R_MAX)
    }

    pub fn with_encoding(
        mut neurons: Vec<Neuron>,
        mut synapses: Vec<Synapse>,
        encoding: LevelEncoding,
        r_max: u32,
    ) -> Result<Self> {
        if encoding.num_levels < 2 {
            return Err(Error::invalid("num_levels", "need at least 2 levels"));
        }
        neurons.sort_by_key(|n| n.id);
        for (pos, n) in neurons.iter().enumerate() {
            if n.id as usize != pos {
                return Err(Error::invalid(
                    format!("neurons[{}]", n.id),
                    "neuron ids must be unique and dense 0..n-1",
                ));
            }
            if !(n.threshold.is_finite() && n.threshold > 0.0) {
                return Err(Error::invalid(
                    format!("neurons[{}].threshold", n.id),
                    "threshold must be a positive finite number",
                ));
            }
        }
        synapses.sort_by_key(|s| s.id);
        let num_neurons = neurons.len();
        let mut fan_in = vec![Vec::new(); num_neurons];
        let mut fan_out = vec![Vec::new(); num_neurons];
        let mut pairs = BTreeMap::new();
        for (pos, s) in synapses.iter().enumerate() {
            if s.id as usize != pos {
                return Err(Error::invalid(
                    format!("synapses[{}]", s.id),
                    "synapse ids must be unique and dense 0..m-1",
                ));
            }
            for end in [s.pre, s.post] {
                if end as usize >= num_neurons {
                    return Err(Error::DanglingReference {
                        synapse: s.id,
                        neuron: end,
                        num_neurons,
                    });
                }
            }
            if s.pre == s.post {
                return Err(Error::Cycle { neuron: s.pre });
            }
            if s.level > encoding.max_level() {
                return Err(Error::LevelOutOfRange {
                    synapse: s.id,
                    level: i64::from(s.level),
                    max: encoding.max_level(),
                });
            }
            if neurons[s.post as usize].kind == NeuronKind::Input {
                return Err(Error::invalid(
                    format!("synapses[{}].post", s.id),
                    format!("neuron {} is an input and cannot receive synapses", s.post),
                ));
            }
            if let Some(first) = pairs.insert((s.pre, s.post), s.id) {
                return Err(Error::invalid(
                    format!("synapses[{}]", s.id),
                    format!("duplicates synapse {first} between {} and {}", s.pre, s.post),
                ));
            }
            fan_in[s.post as usize].push(pos);
            fan_out[s.pre as usize].push(s.post);
        }

        // Kahn's algorithm, always releasing the lowest ready id first.
        let mut indegree: Vec<usize> = fan_in.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<u32>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 0)
            .map(|(id, _)| Reverse(id as u32))
            .collect();
        let mut topo = Vec::with_capacity(num_neurons);
        while let Some(Reverse(id)) = ready.pop() {
            topo.push(id);
            for &post in &fan_out[id as usize] {
                indegree[post as usize] -= 1;
                if indegree[post as usize] == 0 {
                    ready.push(Reverse(post));
                }
            }
        }
        if topo.len() != num_neurons {
            let neuron = indegree.iter().position(|d| *d > 0).unwrap_or(0) as u32;
            return Err(Error::Cycle { neuron });
        }

        let inputs = neurons
            .iter()
            .filter(|n| n.kind == NeuronKind::Input)
            .map(|n| n.id)
            .collect();
        let outputs = neurons
            .iter()
            .filter(|n| n.kind == NeuronKind::Output)
            .map(|n| n.id)
            .collect();
        Ok(Self {
            neurons,
            synapses,
            encoding,
            r_max,
            topo,
            inputs,
            outputs,
            fan_in,
        })
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn synapse(&self, id: u32) -> Result<&Synapse> {
        self.synapses
            .get(id as usize)
            .ok_or(Error::UnknownSynapse(id))
    }

    pub fn encoding(&self) -> LevelEncoding {
        self.encoding
    }

    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    pub fn num_neurons(&self) -> usize {
        self.neurons.len()
    }

    pub fn num_synapses(&self) -> usize {
        self.synapses.len()
    }

    /// Input neuron ids in ascending order.
    pub fn inputs(&self) -> &[u32] {
        &self.inputs
    }

    /// Output neuron ids in ascending order; class `c` is `outputs()[c]`.
    pub fn outputs(&self) -> &[u32] {
        &self.outputs
    }

    pub fn topological_order(&self) -> &[u32] {
        &self.topo
    }

    /// Positions of the synapses feeding `neuron`.
    pub fn fan_in(&self, neuron: u32) -> &[usize] {
        &self.fan_in[neuron as usize]
    }

    pub fn levels(&self) -> Vec<u8> {
        self.synapses.iter().map(|s| s.level).collect()
    }

    /// Inference with the model's own levels.
    pub fn run_inference(&self, input_counts: &[u32]) -> Result<InferenceResult> {
        let levels = self.levels();
        self.run_with_levels(input_counts, &levels)
    }

    /// Inference with per-synapse levels overriding the stored ones.
    ///
    /// Used by the simulator, whose live levels drift away from the model.
    pub fn run_with_levels(&self, input_counts: &[u32], levels: &[u8]) -> Result<InferenceResult> {
        if input_counts.len() != self.inputs.len() {
            return Err(Error::InputLengthMismatch {
                expected: self.inputs.len(),
                got: input_counts.len(),
            });
        }
        debug_assert_eq!(levels.len(), self.synapses.len());
        let mut out = vec![0u32; self.neurons.len()];
        for (k, &id) in self.inputs.iter().enumerate() {
            out[id as usize] = input_counts[k];
        }
        for &id in &self.topo {
            let neuron = &self.neurons[id as usize];
            if neuron.kind == NeuronKind::Input {
                continue;
            }
            let drive: i64 = self.fan_in[id as usize]
                .iter()
                .map(|&pos| {
                    let s = &self.synapses[pos];
                    self.encoding.decode(levels[pos]) * i64::from(out[s.pre as usize])
                })
                .sum();
            let spikes = (drive.max(0) as f64 / neuron.threshold).floor();
            out[id as usize] = spikes.clamp(0.0, f64::from(self.r_max)) as u32;
        }
        let per_synapse_spikes = self.synapses.iter().map(|s| out[s.pre as usize]).collect();
        let output_counts: Vec<u32> = self.outputs.iter().map(|&id| out[id as usize]).collect();
        Ok(InferenceResult {
            predicted: argmax_lowest(&output_counts),
            per_synapse_spikes,
            output_counts,
        })
    }

    /// Copy of the model with one synapse's level shifted by `delta`, clamped.
    pub fn perturb(&self, synapse: u32, delta: i64) -> Result<SnnModel> {
        let pos = self.synapse(synapse)?.id as usize;
        let mut copy = self.clone();
        let current = i64::from(copy.synapses[pos].level);
        copy.synapses[pos].level = self.encoding.clamp(current + delta);
        Ok(copy)
    }

    /// Predicted class per sample.
    pub fn predictions(&self, dataset: &Dataset) -> Result<Vec<usize>> {
        let levels = self.levels();
        self.predictions_with_levels(dataset, &levels)
    }

    pub fn predictions_with_levels(&self, dataset: &Dataset, levels: &[u8]) -> Result<Vec<usize>> {
        dataset
            .samples
            .iter()
            .map(|s| self.run_with_levels(&s.inputs, levels).map(|r| r.predicted))
            .collect()
    }

    /// Fraction of samples whose prediction matches the label.
    pub fn accuracy(&self, dataset: &Dataset) -> Result<f64> {
        let predictions = self.predictions(dataset)?;
        Ok(dataset.accuracy_of(&predictions))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_lowest(values: &[u32]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub inputs: Vec<u32>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub num_classes: usize,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks sample shape against `model` and labels against `num_classes`.
    pub fn validate_for(&self, model: &SnnModel) -> Result<()> {
        for (k, s) in self.samples.iter().enumerate() {
            if s.inputs.len() != model.inputs().len() {
                return Err(Error::invalid(
                    format!("samples[{k}].inputs"),
                    format!(
                        "has {} entries, model has {} input neurons",
                        s.inputs.len(),
                        model.inputs().len()
                    ),
                ));
            }
            if s.label >= self.num_classes {
                return Err(Error::invalid(
                    format!("samples[{k}].label"),
                    format!("label {} >= num_classes {}", s.label, self.num_classes),
                ));
            }
        }
        Ok(())
    }

    pub fn accuracy_of(&self, predictions: &[usize]) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let correct = self
            .samples
            .iter()
            .zip(predictions)
            .filter(|(s, p)| s.label == **p)
            .count();
        correct as f64 / self.samples.len() as f64
    }
}

// ---------------------------------------------------------------------------
// File formats

#[derive(Deserialize)]
#[serde(untagged)]
enum ThresholdRepr {
    Number(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NeuronRecord {
    id: u32,
    kind: NeuronKind,
    threshold: Option<ThresholdRepr>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SynapseRecord {
    id: u32,
    pre: u32,
    post: u32,
    level: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRecord {
    neurons: Vec<NeuronRecord>,
    synapses: Vec<SynapseRecord>,
}

#[derive(Serialize)]
struct NeuronOut {
    id: u32,
    kind: NeuronKind,
    threshold: f64,
}

#[derive(Serialize)]
struct SynapseOut {
    id: u32,
    pre: u32,
    post: u32,
    level: u8,
}

#[derive(Serialize)]
struct ModelOut {
    neurons: Vec<NeuronOut>,
    synapses: Vec<SynapseOut>,
}

impl SnnModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let record: ModelRecord = serde_json::from_str(text).map_err(|source| Error::Parse {
            what: "model".into(),
            source,
        })?;
        let encoding = LevelEncoding::default();
        let mut neurons = Vec::with_capacity(record.neurons.len());
        for n in record.neurons {
            let threshold = match n.threshold {
                None => 1.0,
                Some(ThresholdRepr::Number(v)) => v,
                Some(ThresholdRepr::Text(s)) => s.trim().parse::<f64>().map_err(|_| {
                    Error::invalid(
                        format!("neurons[{}].threshold", n.id),
                        format!("cannot parse {s:?} as a number"),
                    )
                })?,
            };
            neurons.push(Neuron {
                id: n.id,
                kind: n.kind,
                threshold,
            });
        }
        let mut synapses = Vec::with_capacity(record.synapses.len());
        for s in record.synapses {
            if s.level < 0 || s.level > i64::from(encoding.max_level()) {
                return Err(Error::LevelOutOfRange {
                    synapse: s.id,
                    level: s.level,
                    max: encoding.max_level(),
                });
            }
            synapses.push(Synapse {
                id: s.id,
                pre: s.pre,
                post: s.post,
                level: s.level as u8,
            });
        }
        Self::with_encoding(neurons, synapses, encoding, DEFAULT_R_MAX)
    }

    pub fn to_json(&self) -> String {
        let out = ModelOut {
            neurons: self
                .neurons
                .iter()
                .map(|n| NeuronOut {
                    id: n.id,
                    kind: n.kind,
                    threshold: n.threshold,
                })
                .collect(),
            synapses: self
                .synapses
                .iter()
                .map(|s| SynapseOut {
                    id: s.id,
                    pre: s.pre,
                    post: s.post,
                    level: s.level,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&out).expect("model serializes")
    }
}

pub fn load_model(path: &Path) -> Result<SnnModel> {
    SnnModel::from_json(&crate::io::read_to_string(path)?)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = crate::io::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        what: "dataset".into(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Synthetic workloads

/// Parameters for [`generate_synthetic`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticSpec {
    /// Neurons per layer, input layer first. The last layer size is the class count.
    pub layers: Vec<usize>,
    pub num_samples: usize,
    /// Input spike counts are drawn uniformly from `0..=max_input_spikes`.
    pub max_input_spikes: u32,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(layers: Vec<usize>, seed: u64) -> Self {
        Self {
            layers,
            num_samples: 100,
            max_input_spikes: 4,
            seed,
        }
    }
}

/// Fully connected layered model with uniform random levels, plus a dataset
/// labelled by the model's own drift-free predictions.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(SnnModel, Dataset)> {
    if spec.layers.len() < 2 {
        return Err(Error::invalid("layers", "need at least 2 layers"));
    }
    if spec.layers.contains(&0) {
        return Err(Error::invalid("layers", "empty layer"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let last = spec.layers.len() - 1;
    let mut neurons = Vec::new();
    let mut layer_ids: Vec<Vec<u32>> = Vec::new();
    for (l, &size) in spec.layers.iter().enumerate() {
        let kind = match l {
            0 => NeuronKind::Input,
            l if l == last => NeuronKind::Output,
            _ => NeuronKind::Hidden,
        };
        let mut ids = Vec::with_capacity(size);
        for _ in 0..size {
            let id = neurons.len() as u32;
            neurons.push(Neuron {
                id,
                kind,
                threshold: 1.0,
            });
            ids.push(id);
        }
        layer_ids.push(ids);
    }
    let mut synapses = Vec::new();
    for pair in layer_ids.windows(2) {
        for &pre in &pair[0] {
            for &post in &pair[1] {
                synapses.push(Synapse {
                    id: synapses.len() as u32,
                    pre,
                    post,
                    level: rng.gen_range(0..3u8),
                });
            }
        }
    }
    let model = SnnModel::new(neurons, synapses)?;
    let mut samples = Vec::with_capacity(spec.num_samples);
    for _ in 0..spec.num_samples {
        let inputs: Vec<u32> = (0..spec.layers[0])
            .map(|_| rng.gen_range(0..=spec.max_input_spikes))
            .collect();
        let label = model.run_inference(&inputs)?.predicted;
        samples.push(Sample { inputs, label });
    }
    let dataset = Dataset {
        num_classes: spec.layers[last],
        samples,
    };
    Ok((model, dataset))
}
