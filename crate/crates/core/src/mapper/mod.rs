//! Placing cluster synapses on crossbar cells to maximize the minimum
//! inference lifetime.
//!
//! A placement assigns every pre-neuron of a cluster to a distinct input
//! port (row) and every post-neuron to a distinct output port (column);
//! synapse `(i, k)` then lives in cell `(row(i), col(k))`. Its lifetime in
//! inferences is `e[cell][level] / (eta' * pulse_width)`, and the cluster's
//! figure of merit `tau` is the minimum over its synapses. The reprogramming
//! interval of the whole system is the minimum over clusters.

mod exact;
mod heuristic;
pub mod linearize;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::StressField;
use crate::disturb::{transition_time, DisturbParams};
use crate::error::{Error, Result};
use crate::model::SnnModel;
use crate::partition::{Cluster, Clustering};

pub use exact::{solve_exact, DEFAULT_EXACT_CAP, EXACT_ENUMERATION_LIMIT};
pub use heuristic::solve_maxmin;

/// Transition time in seconds of every cell at every level, under the
/// stress voltage that cell sees.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    n: usize,
    num_levels: usize,
    /// `[(i * n + j) * num_levels + level]`
    seconds: Vec<f64>,
}

impl TransitionTable {
    pub fn build(field: &StressField, params: &DisturbParams) -> Result<Self> {
        let (n, num_levels) = (field.n(), field.num_levels());
        let seconds = (0..n * n * num_levels)
            .into_par_iter()
            .map(|k| {
                let level = (k % num_levels) as u8;
                let cell = k / num_levels;
                transition_time(level, field.voltage(cell / n, cell % n, level), params)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, num_levels, seconds })
    }

    /// Table from explicit values laid out `[(i * n + j) * num_levels + level]`.
    pub fn from_values(n: usize, num_levels: usize, seconds: Vec<f64>) -> Result<Self> {
        if n == 0 || num_levels == 0 || seconds.len() != n * n * num_levels {
            return Err(Error::invalid(
                "transition_table",
                format!("expected {n}x{n}x{num_levels} values, got {}", seconds.len()),
            ));
        }
        if let Some(bad) = seconds.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::invalid("transition_table", format!("non-positive transition time {bad}")));
        }
        Ok(Self { n, num_levels, seconds })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    pub fn seconds(&self, i: usize, j: usize, level: u8) -> f64 {
        self.seconds[(i * self.n + j) * self.num_levels + level as usize]
    }
}

/// A synapse as seen by the placement problem, in cluster-local indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSynapse {
    pub id: u32,
    /// Index into [`LifetimeInstance::pre`].
    pub pre: usize,
    /// Index into [`LifetimeInstance::post`].
    pub post: usize,
    pub level: u8,
    /// Spikes per inference used for the lifetime.
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeInstance {
    /// Global neuron ids of the rows to place, ascending.
    pub pre: Vec<u32>,
    /// Global neuron ids of the columns to place, ascending.
    pub post: Vec<u32>,
    pub synapses: Vec<InstanceSynapse>,
    pub pulse_width: f64,
    table: TransitionTable,
    /// Synapse indices per local pre / post.
    by_pre: Vec<Vec<usize>>,
    by_post: Vec<Vec<usize>>,
}

impl LifetimeInstance {
    pub fn new(
        pre: Vec<u32>,
        post: Vec<u32>,
        synapses: Vec<InstanceSynapse>,
        table: TransitionTable,
        pulse_width: f64,
    ) -> Result<Self> {
        let n = table.n;
        if pre.len() > n || post.len() > n {
            return Err(Error::invalid(
                "cluster",
                format!("{} rows x {} columns do not fit a {n}x{n} crossbar", pre.len(), post.len()),
            ));
        }
        if !(pulse_width.is_finite() && pulse_width > 0.0) {
            return Err(Error::invalid("pulse_width", "must be positive"));
        }
        let mut by_pre = vec![Vec::new(); pre.len()];
        let mut by_post = vec![Vec::new(); post.len()];
        let mut seen = BTreeMap::new();
        for (idx, s) in synapses.iter().enumerate() {
            if s.pre >= pre.len() || s.post >= post.len() {
                return Err(Error::invalid(format!("synapse {}", s.id), "endpoint outside the cluster"));
            }
            if s.level as usize >= table.num_levels {
                return Err(Error::LevelOutOfRange {
                    synapse: s.id,
                    level: i64::from(s.level),
                    max: (table.num_levels - 1) as u8,
                });
            }
            if !(s.eta.is_finite() && s.eta > 0.0) {
                return Err(Error::invalid(format!("synapse {}", s.id), "eta must be positive"));
            }
            if seen.insert((s.pre, s.post), s.id).is_some() {
                return Err(Error::invalid(format!("synapse {}", s.id), "two synapses share one cell"));
            }
            by_pre[s.pre].push(idx);
            by_post[s.post].push(idx);
        }
        Ok(Self {
            pre,
            post,
            synapses,
            pulse_width,
            table,
            by_pre,
            by_post,
        })
    }

    /// Crossbar size (ports per side).
    pub fn ports(&self) -> usize {
        self.table.n
    }

    pub fn num_rows(&self) -> usize {
        self.pre.len()
    }

    pub fn num_cols(&self) -> usize {
        self.post.len()
    }

    pub fn table(&self) -> &TransitionTable {
        &self.table
    }

    /// Lifetime in inferences of synapse `s` placed at cell `(j, l)`.
    #[inline]
    pub fn lifetime(&self, s: usize, j: usize, l: usize) -> f64 {
        let syn = &self.synapses[s];
        self.table.seconds(j, l, syn.level) / (syn.eta * self.pulse_width)
    }

    pub(crate) fn synapses_of_pre(&self, i: usize) -> &[usize] {
        &self.by_pre[i]
    }

    pub(crate) fn synapses_of_post(&self, k: usize) -> &[usize] {
        &self.by_post[k]
    }

    /// Minimum lifetime of a placement, recomputed from scratch; infinite
    /// when the cluster has no synapses.
    pub fn evaluate(&self, rows: &[usize], cols: &[usize]) -> f64 {
        self.synapses
            .iter()
            .enumerate()
            .map(|(s, syn)| self.lifetime(s, rows[syn.pre], cols[syn.post]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Same instance with every synapse's `eta` replaced.
    pub fn with_eta(&self, eta_of: impl Fn(u32) -> f64) -> Result<Self> {
        let synapses = self
            .synapses
            .iter()
            .map(|s| InstanceSynapse { eta: eta_of(s.id), ..*s })
            .collect();
        Self::new(self.pre.clone(), self.post.clone(), synapses, self.table.clone(), self.pulse_width)
    }

    fn check_placement(&self, rows: &[usize], cols: &[usize]) -> Result<()> {
        let n = self.ports();
        for (what, ports, len) in [("rows", rows, self.num_rows()), ("cols", cols, self.num_cols())] {
            if ports.len() != len {
                return Err(Error::invalid(what, format!("expected {len} ports, got {}", ports.len())));
            }
            let mut used = vec![false; n];
            for &p in ports {
                if p >= n || std::mem::replace(&mut used[p], true) {
                    return Err(Error::invalid(what, format!("port {p} out of range or reused")));
                }
            }
        }
        Ok(())
    }
}

/// Builds the placement problem for one cluster. `eta` is indexed by global
/// synapse id.
pub fn build_instance(
    cluster: &Cluster,
    model: &SnnModel,
    eta: &[f64],
    table: &TransitionTable,
    pulse_width: f64,
) -> Result<LifetimeInstance> {
    if eta.len() != model.num_synapses() {
        return Err(Error::invalid(
            "eta",
            format!("covers {} synapses, model has {}", eta.len(), model.num_synapses()),
        ));
    }
    if cluster.pre.len() > table.n() || cluster.post.len() > table.n() {
        return Err(Error::invalid(
            format!("clusters[{}]", cluster.id),
            format!(
                "{} pre / {} post neurons exceed crossbar size {}",
                cluster.pre.len(),
                cluster.post.len(),
                table.n()
            ),
        ));
    }
    let synapses = cluster
        .synapses
        .iter()
        .map(|&sid| {
            let s = model.synapse(sid)?;
            let local = |list: &[u32], id: u32| {
                list.binary_search(&id).map_err(|_| {
                    Error::invalid(format!("clusters[{}]", cluster.id), format!("synapse {sid} endpoint {id} missing"))
                })
            };
            Ok(InstanceSynapse {
                id: sid,
                pre: local(&cluster.pre, s.pre)?,
                post: local(&cluster.post, s.post)?,
                level: s.level,
                eta: eta[sid as usize],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LifetimeInstance::new(cluster.pre.clone(), cluster.post.clone(), synapses, table.clone(), pulse_width)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Heuristic,
    Endurer,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingSolution {
    /// Input port per local pre-neuron.
    pub rows: Vec<usize>,
    /// Output port per local post-neuron.
    pub cols: Vec<usize>,
    /// Minimum lifetime in inferences.
    pub tau: f64,
    pub solver: SolverKind,
}

impl MappingSolution {
    pub(crate) fn scored(inst: &LifetimeInstance, rows: Vec<usize>, cols: Vec<usize>, solver: SolverKind) -> Self {
        let tau = inst.evaluate(&rows, &cols);
        Self { rows, cols, tau, solver }
    }
}

/// Uniformly random injective placement.
pub fn solve_random(inst: &LifetimeInstance, seed: u64) -> MappingSolution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ports: Vec<usize> = (0..inst.ports()).collect();
    ports.shuffle(&mut rng);
    let rows = ports[..inst.num_rows()].to_vec();
    ports.shuffle(&mut rng);
    let cols = ports[..inst.num_cols()].to_vec();
    MappingSolution::scored(inst, rows, cols, SolverKind::Random)
}

/// Max-min placement under measured spike counts: every synapse counts.
pub fn solve_endurer(raw: &LifetimeInstance, seed: u64, budget: Option<usize>) -> MappingSolution {
    MappingSolution {
        solver: SolverKind::Endurer,
        ..solve_maxmin(raw, seed, budget)
    }
}

/// Criticality-aware placement: the better of the max-min heuristic on the
/// effective spike counts and the endurer placement re-scored under them.
///
/// Since effective counts never exceed measured ones, the endurer placement
/// keeps at least its own `tau` when re-scored, so the result is never worse
/// than endurer mode.
pub fn solve_proposed(
    effective: &LifetimeInstance,
    endurer: &MappingSolution,
    seed: u64,
    budget: Option<usize>,
) -> MappingSolution {
    let own = solve_maxmin(effective, seed, budget);
    let rescored = MappingSolution::scored(
        effective,
        endurer.rows.clone(),
        endurer.cols.clone(),
        SolverKind::Heuristic,
    );
    if rescored.tau > own.tau {
        rescored
    } else {
        own
    }
}

/// System reprogramming interval: the smallest cluster `tau`.
pub fn aggregate_trpi(solutions: &[MappingSolution]) -> Result<f64> {
    if solutions.is_empty() {
        return Err(Error::invalid("solutions", "need at least one cluster"));
    }
    Ok(solutions.iter().map(|s| s.tau).fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapMode {
    /// Criticality-aware max-min placement.
    Proposed,
    /// Max-min placement treating every synapse as critical.
    Endurer,
    /// Random placement.
    Random,
    /// Exhaustive search on effective spike counts (small clusters only).
    Exact,
}

impl MapMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Self::Proposed),
            "endurer" => Ok(Self::Endurer),
            "random" => Ok(Self::Random),
            "exact" => Ok(Self::Exact),
            other => Err(Error::invalid("mode", format!("unknown mapping mode {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::Endurer => "endurer",
            Self::Random => "random",
            Self::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterMapping {
    pub id: usize,
    /// Pre-neuron id -> input port.
    pub rows: BTreeMap<u32, usize>,
    /// Post-neuron id -> output port.
    pub cols: BTreeMap<u32, usize>,
    pub tau_inferences: f64,
    pub solver: SolverKind,
}

/// Placement of a whole model, one crossbar per cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mapping {
    pub mode: MapMode,
    #[serde(rename = "crossbar_N")]
    pub crossbar_n: usize,
    pub clusters: Vec<ClusterMapping>,
    #[serde(rename = "tRPI_inferences")]
    pub trpi_inferences: f64,
}

/// Where each synapse of a mapped model lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellAddress {
    pub cluster: usize,
    pub row: usize,
    pub col: usize,
}

impl Mapping {
    /// Cell of every synapse, indexed by synapse id.
    pub fn cell_addresses(&self, model: &SnnModel) -> Result<Vec<CellAddress>> {
        let mut home = vec![None; model.num_neurons()];
        for c in &self.clusters {
            for (&post, &port) in &c.cols {
                let slot = home
                    .get_mut(post as usize)
                    .ok_or_else(|| Error::invalid("mapping", format!("unknown neuron {post}")))?;
                if slot.replace((c.id, port)).is_some() {
                    return Err(Error::invalid("mapping", format!("neuron {post} mapped twice")));
                }
            }
        }
        let mut taken = BTreeMap::new();
        model
            .synapses()
            .iter()
            .map(|s| {
                let (cluster, col) = home[s.post as usize].ok_or_else(|| {
                    Error::invalid("mapping", format!("synapse {} post-neuron {} is not mapped", s.id, s.post))
                })?;
                let row = *self.clusters[cluster].rows.get(&s.pre).ok_or_else(|| {
                    Error::invalid(
                        "mapping",
                        format!("synapse {} pre-neuron {} has no row in cluster {cluster}", s.id, s.pre),
                    )
                })?;
                if row >= self.crossbar_n || col >= self.crossbar_n {
                    return Err(Error::OutOfRange { i: row, j: col, n: self.crossbar_n });
                }
                if let Some(other) = taken.insert((cluster, row, col), s.id) {
                    return Err(Error::invalid(
                        "mapping",
                        format!("synapses {other} and {} share cell ({row}, {col}) of cluster {cluster}", s.id),
                    ));
                }
                Ok(CellAddress { cluster, row, col })
            })
            .collect()
    }
}

/// Inputs shared by every cluster of a mapping run.
#[derive(Debug, Clone, Copy)]
pub struct MapOptions {
    pub mode: MapMode,
    pub seed: u64,
    pub exact_cap: usize,
    /// Search effort per heuristic solve, in size-weighted neighbour
    /// evaluations; `None` uses `50 * N^2`.
    pub budget: Option<usize>,
    pub pulse_width: f64,
}

/// Maps every cluster and aggregates the reprogramming interval.
///
/// `effective_eta` drives proposed and exact modes, `raw_eta` drives endurer
/// mode and scores random placements. Clusters are solved in parallel; each
/// cluster's seed is derived from `opts.seed` and its id.
pub fn map_clusters(
    model: &SnnModel,
    clustering: &Clustering,
    effective_eta: &[f64],
    raw_eta: &[f64],
    table: &TransitionTable,
    opts: &MapOptions,
) -> Result<Mapping> {
    clustering.validate(model)?;
    if clustering.crossbar_n != table.n() {
        return Err(Error::invalid(
            "crossbar_N",
            format!("clusters were built for N = {}, circuit has N = {}", clustering.crossbar_n, table.n()),
        ));
    }
    let solved = clustering
        .clusters
        .par_iter()
        .map(|cluster| {
            let seed = opts.seed ^ (cluster.id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let raw = build_instance(cluster, model, raw_eta, table, opts.pulse_width)?;
            let sol = match opts.mode {
                MapMode::Random => solve_random(&raw, seed),
                MapMode::Endurer => solve_endurer(&raw, seed, opts.budget),
                MapMode::Proposed => {
                    let eff = build_instance(cluster, model, effective_eta, table, opts.pulse_width)?;
                    let endurer = solve_endurer(&raw, seed, opts.budget);
                    solve_proposed(&eff, &endurer, seed, opts.budget)
                }
                MapMode::Exact => {
                    let eff = build_instance(cluster, model, effective_eta, table, opts.pulse_width)?;
                    solve_exact(&eff, opts.exact_cap)?
                }
            };
            let inst = &raw;
            inst.check_placement(&sol.rows, &sol.cols)?;
            Ok(ClusterMapping {
                id: cluster.id,
                rows: inst.pre.iter().copied().zip(sol.rows.iter().copied()).collect(),
                cols: inst.post.iter().copied().zip(sol.cols.iter().copied()).collect(),
                tau_inferences: sol.tau,
                solver: sol.solver,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let trpi = solved.iter().map(|c| c.tau_inferences).fold(f64::INFINITY, f64::min);
    Ok(Mapping {
        mode: opts.mode,
        crossbar_n: clustering.crossbar_n,
        clusters: solved,
        trpi_inferences: trpi,
    })
}


#[cfg(test)]
mod tests {
    use super::testutil::random_instance;
    use super::*;
    use crate::circuit::{CircuitMode, CrossbarConfig};
    use approx::assert_relative_eq;

    fn uniform(m: usize, n: usize, ports: usize) -> LifetimeInstance {
        let table = TransitionTable::from_values(ports, 1, vec![2.0; ports * ports]).unwrap();
        let mut synapses = Vec::new();
        for i in 0..m {
            for k in 0..n {
                synapses.push(InstanceSynapse { id: synapses.len() as u32, pre: i, post: k, level: 0, eta: 1.0 });
            }
        }
        LifetimeInstance::new((0..m as u32).collect(), (0..n as u32).collect(), synapses, table, 1e-3).unwrap()
    }

    #[test]
    fn uniform_instance_is_degenerate() {
        let inst = uniform(3, 3, 4);
        let exact = solve_exact(&inst, 6).unwrap();
        let heur = solve_maxmin(&inst, 0, None);
        let rnd = solve_random(&inst, 5);
        assert_relative_eq!(exact.tau, 2000.0, max_relative = 1e-12);
        assert_eq!(exact.tau, heur.tau);
        assert_eq!(exact.tau, rnd.tau);
    }

    #[test]
    fn hot_synapse_takes_best_cell() {
        let table = TransitionTable::from_values(2, 1, vec![8.0, 3.0, 3.0, 1.0]).unwrap();
        let synapses = (0..4)
            .map(|idx| InstanceSynapse {
                id: idx as u32,
                pre: idx / 2,
                post: idx % 2,
                level: 0,
                eta: if idx == 0 { 10.0 } else { 1.0 },
            })
            .collect();
        let inst = LifetimeInstance::new(vec![0, 1], vec![2, 3], synapses, table, 1.0).unwrap();
        let best = solve_exact(&inst, 6).unwrap();
        assert_eq!((best.rows[0], best.cols[0]), (0, 0));
        assert_relative_eq!(best.tau, 0.8, max_relative = 1e-12);
    }

    #[test]
    fn series_transition_times_grow_away_from_driver() {
        let cfg = CrossbarConfig { n: 16, ..CrossbarConfig::default() };
        let field = StressField::build(&cfg, CircuitMode::Series).unwrap();
        let table = TransitionTable::build(&field, &DisturbParams::default()).unwrap();
        for level in 0..3u8 {
            for i in 0..16 {
                for j in 0..16 {
                    if i + 1 < 16 {
                        assert!(table.seconds(i + 1, j, level) >= table.seconds(i, j, level));
                    }
                    if j + 1 < 16 {
                        assert!(table.seconds(i, j + 1, level) >= table.seconds(i, j, level));
                    }
                }
            }
        }
    }

    #[test]
    fn aggregate_is_min() {
        let mk = |tau| MappingSolution { rows: vec![], cols: vec![], tau, solver: SolverKind::Random };
        assert_eq!(aggregate_trpi(&[mk(100.0)]).unwrap(), 100.0);
        assert_eq!(aggregate_trpi(&[mk(100.0), mk(250.0), mk(80.0)]).unwrap(), 80.0);
        assert!(aggregate_trpi(&[]).is_err());
    }

    #[test]
    fn random_is_reproducible() {
        let inst = random_instance(3, 4, 6, 11);
        assert_eq!(solve_random(&inst, 3), solve_random(&inst, 3));
        let one = random_instance(1, 1, 1, 2);
        assert_eq!(solve_random(&one, 9).tau, solve_exact(&one, 6).unwrap().tau);
    }

    #[test]
    fn proposed_never_below_endurer() {
        for seed in 0..20 {
            let raw = random_instance(4, 4, 5, seed);
            let eff = raw
                .with_eta(|id| if id % 3 == 0 { 1e-6 } else { raw.synapses[id as usize].eta })
                .unwrap();
            let endurer = solve_endurer(&raw, seed, None);
            let proposed = solve_proposed(&eff, &endurer, seed, None);
            assert!(proposed.tau >= endurer.tau);
        }
    }

    #[test]
    fn eta_scaling_divides_tau() {
        let inst = random_instance(3, 3, 4, 21);
        let scaled = inst.with_eta(|id| inst.synapses[id as usize].eta * 4.0).unwrap();
        let a = solve_exact(&inst, 6).unwrap();
        let b = solve_exact(&scaled, 6).unwrap();
        assert_relative_eq!(a.tau / 4.0, b.tau, max_relative = 1e-12);
        assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    }
}
