//! Splitting an SNN into crossbar-sized clusters.
//!
//! Clusters are post-neuron centric: a cluster owns a set of non-input
//! neurons together with every synapse feeding them, so a neuron's whole
//! fan-in lands on one crossbar column. Pre-neurons may be shared between
//! clusters (their spikes are broadcast); synapses never are.
//!
//! The objective is interconnect traffic: a synapse whose pre-neuron is
//! computed in another cluster carries that neuron's spikes across the
//! boundary, costing `eta` of the synapse per inference.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NeuronKind, SnnModel};
use crate::profile::SpikeProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cluster {
    pub id: usize,
    /// Distinct pre-neurons of the cluster's synapses, ascending.
    pub pre: Vec<u32>,
    /// Neurons computed by this cluster, ascending.
    pub post: Vec<u32>,
    /// Synapse ids, ascending.
    pub synapses: Vec<u32>,
    /// Traffic entering this cluster from other clusters, spikes/inference.
    #[serde(default)]
    pub cut_spikes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Clustering {
    #[serde(rename = "crossbar_N")]
    pub crossbar_n: usize,
    pub clusters: Vec<Cluster>,
}

impl Clustering {
    /// Checks the clustering against `model`: size limits, endpoint
    /// membership, and that synapses are covered exactly once.
    pub fn validate(&self, model: &SnnModel) -> Result<()> {
        let n = self.crossbar_n;
        if n == 0 {
            return Err(Error::invalid("crossbar_N", "must be positive"));
        }
        let mut owner = vec![None; model.num_synapses()];
        let mut home = vec![None; model.num_neurons()];
        for (pos, c) in self.clusters.iter().enumerate() {
            let field = |what: &str| format!("clusters[{pos}].{what}");
            if c.id != pos {
                return Err(Error::invalid(field("id"), "cluster ids must be 0..k-1 in order"));
            }
            if c.pre.len() > n || c.post.len() > n {
                return Err(Error::invalid(
                    field("pre"),
                    format!("{} pre / {} post neurons exceed crossbar size {n}", c.pre.len(), c.post.len()),
                ));
            }
            for &p in &c.post {
                let slot = home
                    .get_mut(p as usize)
                    .ok_or_else(|| Error::invalid(field("post"), format!("unknown neuron {p}")))?;
                if slot.replace(pos).is_some() {
                    return Err(Error::invalid(field("post"), format!("neuron {p} is in two clusters")));
                }
            }
            for &sid in &c.synapses {
                let s = model.synapse(sid)?;
                if owner[sid as usize].replace(pos).is_some() {
                    return Err(Error::invalid(field("synapses"), format!("synapse {sid} is in two clusters")));
                }
                if c.pre.binary_search(&s.pre).is_err() || c.post.binary_search(&s.post).is_err() {
                    return Err(Error::invalid(
                        field("synapses"),
                        format!("synapse {sid} endpoints {}->{} not in cluster", s.pre, s.post),
                    ));
                }
            }
            if !is_strictly_sorted(&c.pre) || !is_strictly_sorted(&c.post) || !is_strictly_sorted(&c.synapses) {
                return Err(Error::invalid(field("pre"), "neuron and synapse lists must be ascending"));
            }
        }
        if let Some(sid) = owner.iter().position(Option::is_none) {
            return Err(Error::invalid("clusters", format!("synapse {sid} is not in any cluster")));
        }
        for s in model.synapses() {
            if home[s.post as usize] != owner[s.id as usize] {
                return Err(Error::invalid(
                    "clusters",
                    format!("synapse {} is not in the cluster computing neuron {}", s.id, s.post),
                ));
            }
        }
        Ok(())
    }
}

fn is_strictly_sorted(v: &[u32]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Sum of `eta` over synapses whose pre-neuron is computed in another cluster.
pub fn cut_cost(clustering: &Clustering, model: &SnnModel, profile: &SpikeProfile) -> f64 {
    let home = neuron_homes(clustering, model.num_neurons());
    clustering
        .clusters
        .iter()
        .flat_map(|c| c.synapses.iter().map(move |&s| (c.id, s)))
        .filter_map(|(cid, sid)| {
            let s = &model.synapses()[sid as usize];
            match home[s.pre as usize] {
                Some(h) if h != cid => Some(profile.eta[sid as usize]),
                _ => None,
            }
        })
        .sum()
}

fn neuron_homes(clustering: &Clustering, num_neurons: usize) -> Vec<Option<usize>> {
    let mut home = vec![None; num_neurons];
    for c in &clustering.clusters {
        for &p in &c.post {
            home[p as usize] = Some(c.id);
        }
    }
    home
}

/// Working state: which cluster computes each non-input neuron.
struct Assignment<'a> {
    model: &'a SnnModel,
    eta: &'a [f64],
    limit: usize,
    /// `None` for input neurons.
    home: Vec<Option<usize>>,
    /// Per cluster: post count and multiset of pre-neurons.
    posts: Vec<usize>,
    pres: Vec<BTreeMap<u32, usize>>,
    /// Distinct pre-neurons of each neuron's fan-in.
    fan_in_pres: Vec<Vec<u32>>,
    /// Outgoing synapse ids per neuron.
    fan_out: Vec<Vec<usize>>,
}

impl<'a> Assignment<'a> {
    fn new(model: &'a SnnModel, eta: &'a [f64], limit: usize) -> Self {
        let mut fan_out = vec![Vec::new(); model.num_neurons()];
        for s in model.synapses() {
            fan_out[s.pre as usize].push(s.id as usize);
        }
        let fan_in_pres = (0..model.num_neurons() as u32)
            .map(|n| {
                let mut p: Vec<u32> = model.fan_in(n).iter().map(|&s| model.synapses()[s].pre).collect();
                p.sort_unstable();
                p.dedup();
                p
            })
            .collect();
        Self {
            model,
            eta,
            limit,
            home: vec![None; model.num_neurons()],
            posts: Vec::new(),
            pres: Vec::new(),
            fan_in_pres,
            fan_out,
        }
    }

    fn open_cluster(&mut self) -> usize {
        self.posts.push(0);
        self.pres.push(BTreeMap::new());
        self.posts.len() - 1
    }

    fn place(&mut self, neuron: u32, cluster: usize) {
        self.home[neuron as usize] = Some(cluster);
        self.posts[cluster] += 1;
        for &p in &self.fan_in_pres[neuron as usize] {
            *self.pres[cluster].entry(p).or_insert(0) += 1;
        }
    }

    fn remove(&mut self, neuron: u32) -> usize {
        let cluster = self.home[neuron as usize].take().expect("neuron is placed");
        self.posts[cluster] -= 1;
        for &p in &self.fan_in_pres[neuron as usize] {
            let slot = self.pres[cluster].get_mut(&p).expect("pre counted");
            *slot -= 1;
            if *slot == 0 {
                self.pres[cluster].remove(&p);
            }
        }
        cluster
    }

    /// Whether `neuron` (currently unplaced) fits in `cluster`.
    fn fits(&self, neuron: u32, cluster: usize) -> bool {
        if self.posts[cluster] >= self.limit {
            return false;
        }
        let extra = self.fan_in_pres[neuron as usize]
            .iter()
            .filter(|p| !self.pres[cluster].contains_key(p))
            .count();
        self.pres[cluster].len() + extra <= self.limit
    }

    /// Cut traffic on synapses touching `neuron`, given current homes.
    /// Synapses between two neurons in `skip_out` are counted once, from the
    /// post side.
    fn local_cost(&self, neuron: u32, skip_out: &[u32]) -> f64 {
        let syn = self.model.synapses();
        let mine = self.home[neuron as usize];
        let mut cost = 0.0;
        for &sid in self.model.fan_in(neuron) {
            let pre = self.home[syn[sid].pre as usize];
            if pre.is_some() && pre != mine {
                cost += self.eta[sid];
            }
        }
        for &sid in &self.fan_out[neuron as usize] {
            let post = syn[sid].post;
            if skip_out.contains(&post) {
                continue;
            }
            if self.home[post as usize].is_some() && self.home[post as usize] != mine {
                cost += self.eta[sid];
            }
        }
        cost
    }

    /// Traffic saved by placing `neuron` into `cluster` instead of alone.
    fn affinity(&self, neuron: u32, cluster: usize) -> f64 {
        let syn = self.model.synapses();
        let mut gain = 0.0;
        for &sid in self.model.fan_in(neuron) {
            if self.home[syn[sid].pre as usize] == Some(cluster) {
                gain += self.eta[sid];
            }
        }
        for &sid in &self.fan_out[neuron as usize] {
            if self.home[syn[sid].post as usize] == Some(cluster) {
                gain += self.eta[sid];
            }
        }
        gain
    }

    fn total_cost(&self) -> f64 {
        self.model
            .synapses()
            .iter()
            .filter(|s| {
                let pre = self.home[s.pre as usize];
                pre.is_some() && pre != self.home[s.post as usize]
            })
            .map(|s| self.eta[s.id as usize])
            .sum()
    }

    fn into_clustering(self) -> Clustering {
        let model = self.model;
        let mut order: Vec<usize> = Vec::new();
        let mut remap = vec![usize::MAX; self.posts.len()];
        // Number clusters by first appearance in topological order.
        for &n in model.topological_order() {
            if let Some(c) = self.home[n as usize] {
                if remap[c] == usize::MAX {
                    remap[c] = order.len();
                    order.push(c);
                }
            }
        }
        let mut clusters: Vec<Cluster> = (0..order.len())
            .map(|id| Cluster {
                id,
                pre: Vec::new(),
                post: Vec::new(),
                synapses: Vec::new(),
                cut_spikes: 0.0,
            })
            .collect();
        let home: Vec<Option<usize>> = self.home.iter().map(|h| h.map(|c| remap[c])).collect();
        for (n, h) in home.iter().enumerate() {
            if let Some(c) = h {
                clusters[*c].post.push(n as u32);
            }
        }
        for s in model.synapses() {
            let c = home[s.post as usize].expect("non-input neurons are placed");
            let cl = &mut clusters[c];
            cl.synapses.push(s.id);
            cl.pre.push(s.pre);
            if matches!(home[s.pre as usize], Some(h) if h != c) {
                cl.cut_spikes += self.eta[s.id as usize];
            }
        }
        for c in &mut clusters {
            c.pre.sort_unstable();
            c.pre.dedup();
        }
        Clustering {
            crossbar_n: self.limit,
            clusters,
        }
    }
}

fn check_partitionable(model: &SnnModel, profile: &SpikeProfile, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("crossbar_N", "must be positive"));
    }
    if model.num_synapses() == 0 {
        return Err(Error::invalid("model", "model has no synapses to place"));
    }
    if profile.eta.len() != model.num_synapses() {
        return Err(Error::invalid(
            "profile",
            format!("covers {} synapses, model has {}", profile.eta.len(), model.num_synapses()),
        ));
    }
    for neuron in model.neurons() {
        let fan_in = model.fan_in(neuron.id).len();
        if fan_in > n {
            return Err(Error::FanInOverflow {
                neuron: neuron.id,
                fan_in,
                limit: n,
            });
        }
    }
    Ok(())
}

fn placeable(model: &SnnModel) -> Vec<u32> {
    model
        .topological_order()
        .iter()
        .copied()
        .filter(|&n| model.neurons()[n as usize].kind != NeuronKind::Input)
        .collect()
}

/// Greedy clustering in topological order followed by move/swap refinement.
///
/// Each neuron joins the feasible cluster with the most traffic to it,
/// preferring clusters that already share its pre-neurons; a new cluster is
/// opened only when none fits. Refinement then moves single neurons or
/// swaps pairs between clusters, accepting only strict cut reductions, for
/// at most `10 * |synapses|` accepted steps. `seed` breaks ties.
pub fn partition_model(model: &SnnModel, profile: &SpikeProfile, n: usize, seed: u64) -> Result<Clustering> {
    check_partitionable(model, profile, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = Assignment::new(model, &profile.eta, n);
    let neurons = placeable(model);
    let mut tiebreak: Vec<u64> = Vec::new();

    for &neuron in &neurons {
        let mut best: Option<(f64, usize, u64, usize)> = None;
        for c in 0..state.posts.len() {
            if !state.fits(neuron, c) {
                continue;
            }
            let gain = state.affinity(neuron, c);
            let shared = state.fan_in_pres[neuron as usize]
                .iter()
                .filter(|p| state.pres[c].contains_key(p))
                .count();
            let key = (gain, shared, tiebreak[c], c);
            let better = match best {
                None => true,
                Some(b) => (key.0, key.1, key.2) > (b.0, b.1, b.2),
            };
            if better {
                best = Some(key);
            }
        }
        let target = match best {
            Some((_, _, _, c)) => c,
            None => {
                tiebreak.push(rng.gen());
                state.open_cluster()
            }
        };
        state.place(neuron, target);
    }

    refine(&mut state, &neurons, 10 * model.num_synapses());
    let clustering = state.into_clustering();
    debug_assert!(clustering.validate(model).is_ok());
    Ok(clustering)
}

fn refine(state: &mut Assignment<'_>, neurons: &[u32], budget: usize) {
    const TOL: f64 = 1e-12;
    let mut accepted = 0usize;
    let mut improved = true;
    while improved && accepted < budget {
        improved = false;
        'scan: for (ai, &a) in neurons.iter().enumerate() {
            // Single-neuron moves.
            let before = state.local_cost(a, &[]);
            let from = state.home[a as usize].expect("placed");
            let ncl = state.posts.len();
            for to in 0..ncl {
                if to == from {
                    continue;
                }
                state.remove(a);
                if state.fits(a, to) {
                    state.place(a, to);
                    if state.local_cost(a, &[]) < before - TOL {
                        accepted += 1;
                        improved = true;
                        if accepted >= budget {
                            break 'scan;
                        }
                        continue 'scan;
                    }
                    state.remove(a);
                }
                state.place(a, from);
            }
            // Pair swaps.
            for &b in &neurons[ai + 1..] {
                let cb = state.home[b as usize].expect("placed");
                if cb == from {
                    continue;
                }
                let before = state.local_cost(a, &[b]) + state.local_cost(b, &[a]);
                state.remove(a);
                state.remove(b);
                if state.fits(a, cb) {
                    state.place(a, cb);
                    if state.fits(b, from) {
                        state.place(b, from);
                        if state.local_cost(a, &[b]) + state.local_cost(b, &[a]) < before - TOL {
                            accepted += 1;
                            improved = true;
                            if accepted >= budget {
                                break 'scan;
                            }
                            continue 'scan;
                        }
                        state.remove(b);
                    }
                    state.remove(a);
                }
                state.place(a, from);
                state.place(b, cb);
            }
        }
    }
    log::debug!("partition refinement: {accepted} accepted steps, cut {}", state.total_cost());
}

/// Random feasible clustering: neurons in shuffled order join a uniformly
/// chosen cluster with room, opening a new one when none fits.
pub fn random_partition(model: &SnnModel, profile: &SpikeProfile, n: usize, seed: u64) -> Result<Clustering> {
    check_partitionable(model, profile, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = Assignment::new(model, &profile.eta, n);
    let mut neurons = placeable(model);
    neurons.shuffle(&mut rng);
    for &neuron in &neurons {
        let open: Vec<usize> = (0..state.posts.len()).filter(|&c| state.fits(neuron, c)).collect();
        let target = match open.choose(&mut rng) {
            Some(&c) if rng.gen_bool(0.9) => c,
            _ => state.open_cluster(),
        };
        state.place(neuron, target);
    }
    Ok(state.into_clustering())
}
