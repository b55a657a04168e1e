//! Per-synapse spike statistics, single-fault criticality sweeps, and the
//! effective spike counts handed to the mapper.

use rayon::prelude::*;
use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{Dataset, SnnModel};

/// Default replacement spike count for non-critical synapses.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Default accuracy drop that makes a synapse critical.
pub const DEFAULT_THRESHOLD: f64 = 0.01;

/// Level shifts swept by [`classify_criticality`].
pub const DELTAS: [i64; 4] = [-2, -1, 1, 2];

/// One unit-width histogram bucket `[lo, lo + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bucket {
    pub lo: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikeProfile {
    /// Average spikes per inference through each synapse (position == synapse id).
    pub eta: Vec<f64>,
    pub num_images: usize,
    pub avg_spikes_per_image: f64,
    /// Contiguous unit-width buckets from 0 up to the largest occupied one.
    pub histogram: Vec<Bucket>,
}

impl SpikeProfile {
    pub fn num_synapses(&self) -> usize {
        self.eta.len()
    }

    fn from_totals(totals: &[u64], num_images: usize) -> Self {
        let images = num_images as f64;
        let eta: Vec<f64> = totals.iter().map(|&t| t as f64 / images).collect();
        let grand: u64 = totals.iter().sum();
        let avg_spikes_per_image = if totals.is_empty() {
            0.0
        } else {
            grand as f64 / (images * totals.len() as f64)
        };
        Self {
            histogram: histogram(&eta),
            eta,
            num_images,
            avg_spikes_per_image,
        }
    }
}

fn histogram(eta: &[f64]) -> Vec<Bucket> {
    let top = eta.iter().map(|&e| e.floor() as u64).max();
    let Some(top) = top else {
        return Vec::new();
    };
    let mut buckets: Vec<Bucket> = (0..=top).map(|lo| Bucket { lo, count: 0 }).collect();
    for &e in eta {
        buckets[e.floor() as usize].count += 1;
    }
    buckets
}

/// Runs every sample and averages the spikes each synapse carries.
pub fn profile_spikes(model: &SnnModel, dataset: &Dataset) -> Result<SpikeProfile> {
    if dataset.is_empty() {
        return Err(Error::invalid("dataset", "empty dataset"));
    }
    let mut totals = vec![0u64; model.num_synapses()];
    for sample in &dataset.samples {
        let result = model.run_inference(&sample.inputs)?;
        for (t, &x) in totals.iter_mut().zip(&result.per_synapse_spikes) {
            *t += u64::from(x);
        }
    }
    Ok(SpikeProfile::from_totals(&totals, dataset.len()))
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    eta: Vec<f64>,
    num_images: usize,
    avg_spikes_per_image: f64,
    #[serde(serialize_with = "ser_histogram", deserialize_with = "de_histogram")]
    histogram: Vec<Bucket>,
}

fn ser_histogram<S: Serializer>(buckets: &[Bucket], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(buckets.len()))?;
    for b in buckets {
        map.serialize_entry(&format!("{}-{}", b.lo, b.lo + 1), &b.count)?;
    }
    map.end()
}

fn de_histogram<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Bucket>, D::Error> {
    let raw = std::collections::BTreeMap::<String, usize>::deserialize(d)?;
    let mut buckets = Vec::with_capacity(raw.len());
    for (key, count) in raw {
        let lo = key
            .split_once('-')
            .and_then(|(lo, _)| lo.parse::<u64>().ok())
            .ok_or_else(|| D::Error::custom(format!("bad histogram bucket {key:?}")))?;
        buckets.push(Bucket { lo, count });
    }
    buckets.sort_by_key(|b| b.lo);
    Ok(buckets)
}

impl Serialize for SpikeProfile {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProfileFile {
            eta: self.eta.clone(),
            num_images: self.num_images,
            avg_spikes_per_image: self.avg_spikes_per_image,
            histogram: self.histogram.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpikeProfile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = ProfileFile::deserialize(d)?;
        if f.eta.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(D::Error::custom("eta entries must be finite and non-negative"));
        }
        Ok(SpikeProfile {
            eta: f.eta,
            num_images: f.num_images,
            avg_spikes_per_image: f.avg_spikes_per_image,
            histogram: f.histogram,
        })
    }
}

/// Outcome of the single-fault perturbation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityReport {
    pub threshold: f64,
    pub critical: Vec<bool>,
    /// Fraction of synapses whose shift by each of [`DELTAS`] drops accuracy
    /// by at least `threshold`, in the order of [`DELTAS`].
    pub fractions: [f64; 4],
}

impl CriticalityReport {
    pub fn fraction(&self, delta: i64) -> Option<f64> {
        DELTAS
            .iter()
            .position(|&d| d == delta)
            .map(|k| self.fractions[k])
    }

    pub fn num_critical(&self) -> usize {
        self.critical.iter().filter(|c| **c).count()
    }

    /// Every synapse treated as critical; what the raw-spike mapping uses.
    pub fn all_critical(num_synapses: usize) -> Self {
        Self {
            threshold: 0.0,
            critical: vec![true; num_synapses],
            fractions: [1.0; 4],
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CriticalityFile {
    threshold: f64,
    critical: Vec<bool>,
    fractions: std::collections::BTreeMap<String, f64>,
}

impl Serialize for CriticalityReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            threshold: f64,
            critical: &'a [bool],
            #[serde(serialize_with = "ser_fractions")]
            fractions: &'a [f64; 4],
        }
        Out {
            threshold: self.threshold,
            critical: &self.critical,
            fractions: &self.fractions,
        }
        .serialize(s)
    }
}

fn ser_fractions<S: Serializer>(f: &&[f64; 4], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(4))?;
    for (d, v) in DELTAS.iter().zip(f.iter()) {
        map.serialize_entry(&format!("{d:+}"), v)?;
    }
    map.end()
}

impl<'de> Deserialize<'de> for CriticalityReport {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = CriticalityFile::deserialize(d)?;
        let mut fractions = [0.0; 4];
        for (k, delta) in DELTAS.iter().enumerate() {
            let key = format!("{delta:+}");
            fractions[k] = *f
                .fractions
                .get(&key)
                .or_else(|| f.fractions.get(&delta.to_string()))
                .ok_or_else(|| D::Error::custom(format!("missing fraction {key}")))?;
        }
        Ok(CriticalityReport {
            threshold: f.threshold,
            critical: f.critical,
            fractions,
        })
    }
}

/// Perturbs each synapse by each of [`DELTAS`], one synapse at a time, and
/// measures accuracy over the whole dataset.
///
/// A (synapse, delta) pair counts when the shifted model changes at least one
/// prediction and accuracy falls by `threshold` or more. Shifts that clamp to
/// the original level never count. A synapse is critical when any pair counts.
pub fn classify_criticality(
    model: &SnnModel,
    dataset: &Dataset,
    threshold: f64,
) -> Result<CriticalityReport> {
    if dataset.is_empty() {
        return Err(Error::invalid("dataset", "empty dataset"));
    }
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(Error::invalid("threshold", "must be finite and >= 0"));
    }
    dataset.validate_for(model)?;
    let base_levels = model.levels();
    let base = model.predictions_with_levels(dataset, &base_levels)?;
    let base_correct = correct_count(dataset, &base);
    let images = dataset.len() as f64;
    let encoding = model.encoding();

    let per_synapse: Vec<[bool; 4]> = (0..model.num_synapses())
        .into_par_iter()
        .map(|pos| -> Result<[bool; 4]> {
            let mut hits = [false; 4];
            let mut levels = base_levels.clone();
            for (k, &delta) in DELTAS.iter().enumerate() {
                let shifted = encoding.clamp(i64::from(base_levels[pos]) + delta);
                if shifted == base_levels[pos] {
                    continue;
                }
                levels[pos] = shifted;
                let preds = model.predictions_with_levels(dataset, &levels)?;
                let changed = preds != base;
                let drop = (base_correct as f64 - correct_count(dataset, &preds) as f64) / images;
                hits[k] = changed && drop >= threshold;
            }
            Ok(hits)
        })
        .collect::<Result<_>>()?;

    let n = model.num_synapses().max(1) as f64;
    let mut fractions = [0.0; 4];
    for (k, f) in fractions.iter_mut().enumerate() {
        *f = per_synapse.iter().filter(|h| h[k]).count() as f64 / n;
    }
    Ok(CriticalityReport {
        threshold,
        critical: per_synapse.iter().map(|h| h.iter().any(|x| *x)).collect(),
        fractions,
    })
}

fn correct_count(dataset: &Dataset, predictions: &[usize]) -> usize {
    dataset
        .samples
        .iter()
        .zip(predictions)
        .filter(|(s, p)| s.label == **p)
        .count()
}

/// Spike counts the optimizer sees: critical synapses keep their measured
/// average, everything else gets `epsilon`.
///
/// Critical averages are floored at `epsilon`, keeping every lifetime finite
/// and the result pointwise no larger than [`raw_eta`].
pub fn effective_eta(
    profile: &SpikeProfile,
    crit: &CriticalityReport,
    epsilon: f64,
) -> Result<Vec<f64>> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be positive and finite"));
    }
    if crit.critical.len() != profile.eta.len() {
        return Err(Error::invalid(
            "criticality",
            format!(
                "covers {} synapses, profile has {}",
                crit.critical.len(),
                profile.eta.len()
            ),
        ));
    }
    let min_critical = profile
        .eta
        .iter()
        .zip(&crit.critical)
        .filter(|(e, c)| **c && **e > 0.0)
        .map(|(e, _)| *e)
        .fold(f64::INFINITY, f64::min);
    if epsilon >= min_critical {
        log::warn!(
            "epsilon {epsilon} is not below the smallest critical spike count {min_critical}; \
             non-critical synapses may stay on the lifetime bottleneck"
        );
    }
    Ok(profile
        .eta
        .iter()
        .zip(&crit.critical)
        .map(|(&e, &c)| if c { e.max(epsilon) } else { epsilon })
        .collect())
}

/// Measured spike counts with silent synapses lifted to `epsilon`.
pub fn raw_eta(profile: &SpikeProfile, epsilon: f64) -> Result<Vec<f64>> {
    effective_eta(profile, &CriticalityReport::all_critical(profile.eta.len()), epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Neuron, NeuronKind, Sample, Synapse};

    fn one_synapse() -> SnnModel {
        SnnModel::new(
            vec![
                Neuron { id: 0, kind: NeuronKind::Input, threshold: 1.0 },
                Neuron { id: 1, kind: NeuronKind::Output, threshold: 1.0 },
            ],
            vec![Synapse { id: 0, pre: 0, post: 1, level: 2 }],
        )
        .unwrap()
    }

    #[test]
    fn mean_of_two_images() {
        let data = Dataset {
            num_classes: 1,
            samples: vec![
                Sample { inputs: vec![4], label: 0 },
                Sample { inputs: vec![6], label: 0 },
            ],
        };
        let p = profile_spikes(&one_synapse(), &data).unwrap();
        assert_eq!(p.eta, vec![5.0]);
        assert_eq!(p.avg_spikes_per_image, 5.0);
        assert_eq!(p.histogram.iter().map(|b| b.count).sum::<usize>(), 1);
        assert_eq!(p.histogram.last().unwrap().lo, 5);
    }

    #[test]
    fn empty_dataset_rejected() {
        let data = Dataset { num_classes: 1, samples: vec![] };
        assert!(profile_spikes(&one_synapse(), &data).is_err());
    }

    #[test]
    fn effective_eta_definition() {
        let profile = SpikeProfile::from_totals(&[10, 3], 1);
        let crit = CriticalityReport {
            threshold: 0.01,
            critical: vec![true, false],
            fractions: [0.0; 4],
        };
        assert_eq!(effective_eta(&profile, &crit, 1e-6).unwrap(), vec![10.0, 1e-6]);
        let all = CriticalityReport::all_critical(2);
        assert_eq!(effective_eta(&profile, &all, 1e-6).unwrap(), vec![10.0, 3.0]);
        assert!(effective_eta(&profile, &crit, 0.0).is_err());
    }

    #[test]
    fn fraction_keys_are_signed() {
        let crit = CriticalityReport {
            threshold: 0.01,
            critical: vec![true],
            fractions: [0.25, 0.5, 0.0, 1.0],
        };
        let text = serde_json::to_string(&crit).unwrap();
        assert!(text.contains("\"-2\":0.25"));
        assert!(text.contains("\"+1\":0.0"));
        let back: CriticalityReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, crit);
    }

    #[test]
    fn profile_json_keys() {
        let p = SpikeProfile::from_totals(&[0, 25, 3], 10);
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.starts_with("{\"eta\":[0.0,2.5,0.3],\"num_images\":10"));
        assert!(text.contains("\"histogram\":{\"0-1\":2,\"1-2\":0,\"2-3\":1}"));
        let back: SpikeProfile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
}
