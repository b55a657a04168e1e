//! Inference streams on drifting crossbars.
//!
//! Each streamed sample runs through the model at its current (possibly
//! drifted) levels. Every synapse's cell then accumulates read stress at the
//! voltage it sees; transitions reported by the disturb model are written
//! back into the live levels. A periodic policy restores all programmed
//! levels and clears the stress, billing the reprogramming time into the
//! system overhead `tRPT / (interval * inference_period)`.

use serde::{Deserialize, Serialize};

use crate::circuit::StressField;
use crate::disturb::{accumulate_stress_seconds, transition_time, CellState, DisturbParams, Transition};
use crate::error::{Error, Result};
use crate::mapper::{map_clusters, CellAddress, MapMode, MapOptions, Mapping, TransitionTable};
use crate::model::{Dataset, InferenceResult, SnnModel};
use crate::partition::Clustering;

/// Default accuracy window, samples.
pub const DEFAULT_WINDOW: usize = 100;
/// Default wall-clock time of one inference, seconds.
pub const DEFAULT_INFERENCE_PERIOD: f64 = 10e-3;

/// Time to reload and re-verify all weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReprogramCostModel {
    /// Memory channel bandwidth, bits/s.
    pub channel_bandwidth: f64,
    pub bits_per_cell: u32,
    /// Program-and-verify time per cell, seconds.
    pub pv_latency: f64,
    /// Cells programmed concurrently.
    pub pv_parallelism: u64,
}

impl Default for ReprogramCostModel {
    fn default() -> Self {
        Self {
            channel_bandwidth: 1e6,
            bits_per_cell: 2,
            pv_latency: 1e-3,
            pv_parallelism: 128,
        }
    }
}

impl ReprogramCostModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.channel_bandwidth.is_finite() && self.channel_bandwidth > 0.0) {
            return Err(Error::invalid("cost.channel_bandwidth", "must be positive"));
        }
        if self.bits_per_cell == 0 {
            return Err(Error::invalid("cost.bits_per_cell", "must be positive"));
        }
        if !(self.pv_latency.is_finite() && self.pv_latency > 0.0) {
            return Err(Error::invalid("cost.pv_latency", "must be positive"));
        }
        if self.pv_parallelism == 0 {
            return Err(Error::invalid("cost.pv_parallelism", "must be positive"));
        }
        Ok(())
    }
}

/// Reprogramming time: weight transfer plus batched program-and-verify.
pub fn estimate_trpt(num_synapses: usize, num_cells: usize, cost: &ReprogramCostModel) -> Result<f64> {
    cost.validate()?;
    let transfer = num_synapses as f64 * f64::from(cost.bits_per_cell) / cost.channel_bandwidth;
    let batches = (num_cells as u64).div_ceil(cost.pv_parallelism);
    Ok(transfer + batches as f64 * cost.pv_latency)
}

/// Largest whole number of inferences strictly inside the lifetime `trpi`,
/// with a relative guard against rounding in the stress sums; at least 1.
pub fn auto_interval(trpi: f64) -> u64 {
    if !trpi.is_finite() {
        return u64::MAX;
    }
    let guarded = trpi * (1.0 - 1e-9);
    let k = guarded.ceil() - 1.0;
    if k < 1.0 {
        log::warn!("reprogramming interval {trpi} is below one inference; using 1");
        1
    } else {
        k as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReprogramPolicy {
    Never,
    Every(u64),
}

impl ReprogramPolicy {
    /// Parses `never`, `every=K`, or `auto` (resolved against `trpi`).
    pub fn parse(s: &str, trpi: Option<f64>) -> Result<Self> {
        match s {
            "never" => Ok(Self::Never),
            "auto" => {
                let trpi = trpi.ok_or_else(|| Error::invalid("policy", "auto needs a mapping tRPI"))?;
                Ok(Self::Every(auto_interval(trpi)))
            }
            other => {
                let k = other
                    .strip_prefix("every=")
                    .and_then(|k| k.parse::<u64>().ok())
                    .filter(|&k| k > 0)
                    .ok_or_else(|| {
                        Error::invalid("policy", format!("expected never, auto or every=K with K >= 1, got {other:?}"))
                    })?;
                Ok(Self::Every(k))
            }
        }
    }
}

/// How read stress per inference is billed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressAccounting {
    /// Each inference applies the profiled mean spike count, the same
    /// quantity the lifetime model divides by.
    #[default]
    Mean,
    /// Each inference applies the spikes it actually produced.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub policy: ReprogramPolicy,
    pub stream_length: u64,
    pub seed: u64,
    pub window: usize,
    pub inference_period: f64,
    pub accounting: StressAccounting,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            policy: ReprogramPolicy::Never,
            stream_length: 1000,
            seed: 0,
            window: DEFAULT_WINDOW,
            inference_period: DEFAULT_INFERENCE_PERIOD,
            accounting: StressAccounting::Mean,
        }
    }
}

/// Accuracy over tumbling windows. One entry stands for a run of
/// consecutive windows with identical values and sits at the end of the
/// last of them; the earlier windows of the run end at the multiples of the
/// window size since the previous entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    /// Inferences completed at the end of the window.
    pub inference_index: u64,
    pub window_accuracy: f64,
    pub drift_events_cum: u64,
    pub critical_drift_events_cum: u64,
    pub reprogram_events_cum: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub stream_length: u64,
    pub policy: ReprogramPolicy,
    pub accounting: StressAccounting,
    pub timeline: Vec<TimelineEntry>,
    /// Level transitions emitted by the disturb model.
    pub drift_events: u64,
    /// Level changes written into the live model.
    pub applied_transitions: u64,
    pub critical_drift_events: u64,
    pub reprogram_events: u64,
    #[serde(rename = "tRPI_inferences")]
    pub trpi_inferences: f64,
    #[serde(rename = "tRPT_seconds")]
    pub trpt_seconds: f64,
    /// Seconds between reprograms; infinite without reprogramming.
    pub interval_seconds: Option<f64>,
    pub overhead: f64,
    pub baseline_accuracy: f64,
    pub final_accuracy: f64,
    pub stream_accuracy: f64,
}

impl SimulationReport {
    pub fn timeline_csv(&self) -> String {
        let mut out = String::from("inference_index,window_accuracy,drift_events_cum,reprogram_events_cum\n");
        for e in &self.timeline {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.inference_index, e.window_accuracy, e.drift_events_cum, e.reprogram_events_cum
            ));
        }
        out
    }
}

/// Everything a simulation run reads.
#[derive(Debug, Clone, Copy)]
pub struct SimContext<'a> {
    pub model: &'a SnnModel,
    pub dataset: &'a Dataset,
    pub mapping: &'a Mapping,
    pub field: &'a StressField,
    pub params: &'a DisturbParams,
    /// Profiled mean spikes per inference, by synapse id (mean accounting).
    pub eta: &'a [f64],
    /// Critical synapses, by id; `None` treats every synapse as critical.
    pub critical: Option<&'a [bool]>,
    pub cost: &'a ReprogramCostModel,
}

/// Streams `opts.stream_length` inferences and reports accuracy, drift and
/// overhead.
///
/// Under mean accounting every cell gains a fixed amount of stress per
/// inference, so the stream is advanced event by event: between drift
/// events and reprograms the levels, and hence every prediction, are
/// constant. Sampled accounting steps through each inference.
pub fn run_simulation(ctx: &SimContext<'_>, opts: &SimOptions) -> Result<SimulationReport> {
    let cells = validate(ctx, opts)?;
    let stream = match opts.accounting {
        StressAccounting::Mean => stream_events(ctx, opts, &cells)?,
        StressAccounting::Sampled => stream_stepped(ctx, opts, &cells)?,
    };
    report(ctx, opts, &cells, stream)
}

fn validate(ctx: &SimContext<'_>, opts: &SimOptions) -> Result<Vec<CellAddress>> {
    let model = ctx.model;
    ctx.dataset.validate_for(model)?;
    if ctx.dataset.is_empty() {
        return Err(Error::invalid("dataset", "no samples to stream"));
    }
    if opts.stream_length == 0 {
        return Err(Error::invalid("length", "stream length must be at least 1"));
    }
    if opts.window == 0 {
        return Err(Error::invalid("window", "must be at least 1"));
    }
    if !(opts.inference_period.is_finite() && opts.inference_period > 0.0) {
        return Err(Error::invalid("inference_period", "must be positive"));
    }
    if ctx.eta.len() != model.num_synapses() {
        return Err(Error::invalid("profile", "spike profile does not match the model"));
    }
    if ctx.critical.is_some_and(|c| c.len() != model.num_synapses()) {
        return Err(Error::invalid("criticality", "criticality does not match the model"));
    }
    if ctx.mapping.crossbar_n != ctx.field.n() {
        return Err(Error::invalid("mapping", "crossbar size differs from the circuit configuration"));
    }
    let cells = ctx.mapping.cell_addresses(model)?;
    if usize::from(model.encoding().max_level()) >= ctx.field.num_levels() {
        return Err(Error::invalid("r_cell_levels", "fewer resistance levels than model levels"));
    }
    Ok(cells)
}

/// Counters and accuracy bookkeeping shared by both stream engines.
struct Stream {
    timeline: Timeline,
    drift: u64,
    applied: u64,
    critical_drift: u64,
    reprograms: u64,
    total_hits: u64,
}

impl Stream {
    fn new(opts: &SimOptions, baseline_accuracy: f64) -> Self {
        Self {
            timeline: Timeline::new(opts.window as u64, opts.stream_length, baseline_accuracy),
            drift: 0,
            applied: 0,
            critical_drift: 0,
            reprograms: 0,
            total_hits: 0,
        }
    }

    fn counters(&self) -> Counters {
        Counters {
            drift: self.drift,
            critical_drift: self.critical_drift,
            reprograms: self.reprograms,
        }
    }

    /// Records `events` of synapse `s` and writes the final level into
    /// `levels`. Returns whether the live level changed.
    fn apply(&mut self, ctx: &SimContext<'_>, s: usize, events: &[Transition], levels: &mut [u8]) -> bool {
        let mut changed = false;
        for ev in events {
            self.drift += 1;
            if ctx.critical.is_none_or(|c| c[s]) {
                self.critical_drift += 1;
            }
            if levels[s] != ev.to {
                levels[s] = ev.to;
                self.applied += 1;
            }
            changed = true;
        }
        changed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Counters {
    drift: u64,
    critical_drift: u64,
    reprograms: u64,
}

/// Tumbling accuracy windows of `window` inferences, the last one possibly
/// short. Consecutive windows with identical accuracy and counters are
/// stored as one entry at the end of the run, so every window's values can
/// be recovered from the entries and the window size.
struct Timeline {
    window: u64,
    length: u64,
    entries: Vec<TimelineEntry>,
    hits: u64,
    len: u64,
    last_accuracy: f64,
}

impl Timeline {
    fn new(window: u64, length: u64, baseline_accuracy: f64) -> Self {
        Self {
            window,
            length,
            entries: Vec::new(),
            hits: 0,
            len: 0,
            last_accuracy: baseline_accuracy,
        }
    }

    /// Adds `hits` correct predictions over `len` inferences that do not
    /// cross a window boundary.
    fn add(&mut self, hits: u64, len: u64) {
        self.hits += hits;
        self.len += len;
    }

    /// Inferences left in the open window.
    fn room(&self, t: u64) -> u64 {
        (self.window - self.len).min(self.length - t)
    }

    /// Closes the open window if it ends at inference `t`.
    fn close_if_full(&mut self, t: u64, counters: Counters) {
        if self.len == self.window || (t == self.length && self.len > 0) {
            let accuracy = self.hits as f64 / self.len as f64;
            self.push(t, accuracy, counters);
            self.hits = 0;
            self.len = 0;
        }
    }

    /// Closes `count` whole windows, all with `accuracy`, the last ending at
    /// inference `t`.
    fn skip(&mut self, t: u64, count: u64, accuracy: f64, counters: Counters) {
        debug_assert_eq!(self.len, 0);
        if count > 0 {
            self.push(t, accuracy, counters);
        }
    }

    fn push(&mut self, t: u64, accuracy: f64, c: Counters) {
        self.last_accuracy = accuracy;
        let entry = TimelineEntry {
            inference_index: t,
            window_accuracy: accuracy,
            drift_events_cum: c.drift,
            critical_drift_events_cum: c.critical_drift,
            reprogram_events_cum: c.reprograms,
        };
        if let Some(last) = self.entries.last_mut() {
            if (TimelineEntry { inference_index: t, ..last.clone() }) == entry {
                last.inference_index = t;
                return;
            }
        }
        self.entries.push(entry);
    }
}

fn reprogram_due(policy: ReprogramPolicy, t: u64) -> bool {
    matches!(policy, ReprogramPolicy::Every(k) if t.is_multiple_of(k))
}

/// One inference at a time; needed when stress depends on the spikes each
/// inference actually produced.
fn stream_stepped(ctx: &SimContext<'_>, opts: &SimOptions, cells: &[CellAddress]) -> Result<Stream> {
    let model = ctx.model;
    let max_level = model.encoding().max_level();
    let pw = ctx.params.pulse_width;
    let programmed = model.levels();
    let mut levels = programmed.clone();
    let mut states: Vec<CellState> = programmed.iter().map(|&l| CellState::programmed(l)).collect();
    let mut cache: Vec<Option<InferenceResult>> = vec![None; ctx.dataset.len()];
    let mut stream = Stream::new(opts, model.accuracy(ctx.dataset)?);
    let start = (opts.seed % ctx.dataset.len() as u64) as usize;

    for t in 1..=opts.stream_length {
        let idx = ((start as u64 + t - 1) % ctx.dataset.len() as u64) as usize;
        if cache[idx].is_none() {
            cache[idx] = Some(model.run_with_levels(&ctx.dataset.samples[idx].inputs, &levels)?);
        }
        let result = cache[idx].take().expect("just filled");
        let hit = u64::from(result.predicted == ctx.dataset.samples[idx].label);
        stream.total_hits += hit;
        stream.timeline.add(hit, 1);

        let mut changed = false;
        for (s, cell) in cells.iter().enumerate() {
            let seconds = match opts.accounting {
                StressAccounting::Mean => ctx.eta[s] * pw,
                StressAccounting::Sampled => f64::from(result.per_synapse_spikes[s]) * pw,
            };
            if seconds == 0.0 {
                continue;
            }
            let v = ctx.field.voltage(cell.row, cell.col, levels[s]);
            let (next, events) = accumulate_stress_seconds(&states[s], seconds, v, ctx.params, max_level)?;
            states[s] = next;
            changed |= stream.apply(ctx, s, &events, &mut levels);
        }
        cache[idx] = Some(result);

        if reprogram_due(opts.policy, t) {
            stream.reprograms += 1;
            changed |= levels != programmed;
            levels.clone_from(&programmed);
            states = programmed.iter().map(|&l| CellState::programmed(l)).collect();
        }
        if changed {
            cache.iter_mut().for_each(|c| *c = None);
        }
        let counters = stream.counters();
        stream.timeline.close_if_full(t, counters);
    }
    Ok(stream)
}

/// Stress of one cell under mean accounting: `carry` seconds at inference
/// `base`, growing by `rate` per inference while the level holds.
#[derive(Debug, Clone, Copy)]
struct Clock {
    carry: f64,
    base: u64,
    rate: f64,
    /// Inference at whose end the next transition fires; `u64::MAX` never.
    next: u64,
}

impl Clock {
    fn stress_after(&self, n: u64) -> f64 {
        self.carry + n as f64 * self.rate
    }

    /// First inference after `base` at which the stress reaches `limit`.
    fn schedule(&mut self, limit: f64) {
        self.next = if self.rate == 0.0 || !limit.is_finite() {
            u64::MAX
        } else {
            let guess = ((limit - self.carry) / self.rate).ceil().max(1.0);
            if guess >= (u64::MAX / 4) as f64 {
                u64::MAX
            } else {
                let mut n = guess as u64;
                while n > 1 && self.stress_after(n - 1) >= limit {
                    n -= 1;
                }
                while self.stress_after(n) < limit {
                    n += 1;
                }
                self.base + n
            }
        };
    }
}

/// Predictions of every sample at fixed levels, filled on demand.
struct Predictions {
    hit: Vec<Option<bool>>,
    prefix: Option<Vec<u64>>,
}

impl Predictions {
    fn new(n: usize) -> Self {
        Self { hit: vec![None; n], prefix: None }
    }

    fn clear(&mut self) {
        self.hit.iter_mut().for_each(|h| *h = None);
        self.prefix = None;
    }

    fn get(&mut self, ctx: &SimContext<'_>, levels: &[u8], idx: usize) -> Result<bool> {
        if let Some(h) = self.hit[idx] {
            return Ok(h);
        }
        let sample = &ctx.dataset.samples[idx];
        let h = ctx.model.run_with_levels(&sample.inputs, levels)?.predicted == sample.label;
        self.hit[idx] = Some(h);
        Ok(h)
    }

    /// Correct predictions over `len` consecutive stream positions starting
    /// at dataset index `from`.
    fn count(&mut self, ctx: &SimContext<'_>, levels: &[u8], from: usize, len: u64) -> Result<u64> {
        let d = self.hit.len();
        if len < d as u64 {
            let mut hits = 0;
            for k in 0..len as usize {
                hits += u64::from(self.get(ctx, levels, (from + k) % d)?);
            }
            return Ok(hits);
        }
        if self.prefix.is_none() {
            let mut prefix = vec![0u64; d + 1];
            for i in 0..d {
                prefix[i + 1] = prefix[i] + u64::from(self.get(ctx, levels, i)?);
            }
            self.prefix = Some(prefix);
        }
        let p = self.prefix.as_ref().expect("just built");
        let rem = (len % d as u64) as usize;
        let partial = if from + rem <= d {
            p[from + rem] - p[from]
        } else {
            p[d] - p[from] + p[from + rem - d]
        };
        Ok(len / d as u64 * p[d] + partial)
    }

    /// Whether every sample has the same outcome; `None` when mixed.
    fn uniform(&mut self, ctx: &SimContext<'_>, levels: &[u8]) -> Result<Option<bool>> {
        let all = self.count(ctx, levels, 0, self.hit.len() as u64)?;
        Ok(match all {
            0 => Some(false),
            n if n == self.hit.len() as u64 => Some(true),
            _ => None,
        })
    }
}

/// Mean accounting, advanced from one drift event or reprogram to the next.
fn stream_events(ctx: &SimContext<'_>, opts: &SimOptions, cells: &[CellAddress]) -> Result<Stream> {
    let model = ctx.model;
    let max_level = model.encoding().max_level();
    let pw = ctx.params.pulse_width;
    let d = ctx.dataset.len();
    let programmed = model.levels();
    let mut levels = programmed.clone();
    let mut stream = Stream::new(opts, model.accuracy(ctx.dataset)?);
    let mut preds = Predictions::new(d);
    let start = (opts.seed % d as u64) as usize;
    let length = opts.stream_length;

    let limit = |s: usize, level: u8| -> Result<f64> {
        if level >= max_level {
            return Ok(f64::INFINITY);
        }
        let cell = cells[s];
        transition_time(level, ctx.field.voltage(cell.row, cell.col, level), ctx.params)
    };
    let fresh = |s: usize, at: u64, level: u8| -> Result<Clock> {
        let mut clock = Clock { carry: 0.0, base: at, rate: ctx.eta[s] * pw, next: u64::MAX };
        clock.schedule(limit(s, level)?);
        Ok(clock)
    };
    let mut clocks: Vec<Clock> = (0..cells.len()).map(|s| fresh(s, 0, programmed[s])).collect::<Result<_>>()?;

    let mut t = 0u64;
    while t < length {
        let next_event = clocks.iter().map(|c| c.next).min().unwrap_or(u64::MAX);
        let next_reprogram = match opts.policy {
            ReprogramPolicy::Every(k) => (t / k).saturating_add(1).saturating_mul(k),
            ReprogramPolicy::Never => u64::MAX,
        };
        let end = next_event.min(next_reprogram).min(length);

        // Inferences t+1 ..= end all run at the current levels.
        let uniform = if end - t >= 2 * opts.window as u64 { preds.uniform(ctx, &levels)? } else { None };
        while t < end {
            let room = stream.timeline.room(t);
            if stream.timeline.len == 0 && room == opts.window as u64 {
                if let Some(hit) = uniform {
                    // Whole windows strictly before `end` share one accuracy.
                    let whole = (end - t - 1) / room;
                    if whole > 0 {
                        let span = whole * room;
                        stream.total_hits += if hit { span } else { 0 };
                        t += span;
                        let counters = stream.counters();
                        stream.timeline.skip(t, whole, if hit { 1.0 } else { 0.0 }, counters);
                        continue;
                    }
                }
            }
            let take = room.min(end - t);
            let from = (start + (t % d as u64) as usize) % d;
            let hits = preds.count(ctx, &levels, from, take)?;
            stream.total_hits += hits;
            stream.timeline.add(hits, take);
            t += take;
            if t < end {
                let counters = stream.counters();
                stream.timeline.close_if_full(t, counters);
            }
        }

        // Stress of inference `end` and the transitions it triggers.
        let mut changed = false;
        for s in 0..cells.len() {
            if clocks[s].next != end {
                continue;
            }
            let c = clocks[s];
            let cell = cells[s];
            let v = ctx.field.voltage(cell.row, cell.col, levels[s]);
            let mut state = CellState::programmed(levels[s]);
            state.accumulated_stress = c.stress_after(end - c.base - 1);
            let (next, events) = accumulate_stress_seconds(&state, c.rate, v, ctx.params, max_level)?;
            changed |= stream.apply(ctx, s, &events, &mut levels);
            clocks[s] = Clock { carry: next.accumulated_stress, base: end, ..c };
            clocks[s].schedule(limit(s, levels[s])?);
        }
        if reprogram_due(opts.policy, end) {
            stream.reprograms += 1;
            changed |= levels != programmed;
            levels.clone_from(&programmed);
            for (s, clock) in clocks.iter_mut().enumerate() {
                *clock = fresh(s, end, programmed[s])?;
            }
        }
        if changed {
            preds.clear();
        }
        let counters = stream.counters();
        stream.timeline.close_if_full(end, counters);
    }
    Ok(stream)
}

fn report(ctx: &SimContext<'_>, opts: &SimOptions, cells: &[CellAddress], stream: Stream) -> Result<SimulationReport> {
    let trpt = estimate_trpt(ctx.model.num_synapses(), cells.len(), ctx.cost)?;
    let (interval_seconds, overhead) = match opts.policy {
        ReprogramPolicy::Never => (None, 0.0),
        ReprogramPolicy::Every(k) => {
            let secs = k as f64 * opts.inference_period;
            (Some(secs), trpt / secs)
        }
    };
    Ok(SimulationReport {
        seed: opts.seed,
        stream_length: opts.stream_length,
        policy: opts.policy,
        accounting: opts.accounting,
        baseline_accuracy: ctx.model.accuracy(ctx.dataset)?,
        final_accuracy: stream.timeline.last_accuracy,
        stream_accuracy: stream.total_hits as f64 / opts.stream_length as f64,
        timeline: stream.timeline.entries,
        drift_events: stream.drift,
        applied_transitions: stream.applied,
        critical_drift_events: stream.critical_drift,
        reprogram_events: stream.reprograms,
        trpi_inferences: ctx.mapping.trpi_inferences,
        trpt_seconds: trpt,
        interval_seconds,
        overhead,
    })
}

/// One row of a mode comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub mode: MapMode,
    #[serde(rename = "tRPI_inferences")]
    pub trpi_inferences: f64,
    /// Reprogramming interval the mode would run with.
    pub reprogram_every: u64,
    #[serde(rename = "tRPT_seconds")]
    pub trpt_seconds: f64,
    /// `tRPT / (reprogram_every * inference_period)`.
    pub overhead: f64,
    /// Whether the simulated stream actually reprogrammed.
    pub reprogrammed: bool,
    pub final_accuracy: f64,
    pub stream_accuracy: f64,
    pub drift_events: u64,
    pub critical_drift_events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub modes: Vec<ModeResult>,
    /// `1 - overhead(proposed) / overhead(endurer)`.
    pub overhead_reduction: f64,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,tRPI,tRPT,overhead,final_accuracy\n");
        for m in &self.modes {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                m.mode.name(),
                m.trpi_inferences,
                m.trpt_seconds,
                m.overhead,
                m.final_accuracy
            ));
        }
        out
    }

    pub fn mode(&self, mode: MapMode) -> Option<&ModeResult> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

/// Inputs for [`compare_modes`].
#[derive(Debug, Clone, Copy)]
pub struct CompareContext<'a> {
    pub model: &'a SnnModel,
    pub dataset: &'a Dataset,
    pub clustering: &'a Clustering,
    pub field: &'a StressField,
    pub table: &'a TransitionTable,
    pub params: &'a DisturbParams,
    /// Profiled mean spikes per inference.
    pub eta: &'a [f64],
    /// Spike counts with non-critical synapses replaced by epsilon.
    pub effective_eta: &'a [f64],
    /// Measured spike counts floored at epsilon.
    pub raw_eta: &'a [f64],
    pub critical: &'a [bool],
    pub cost: &'a ReprogramCostModel,
}

/// Maps the clustering in random, endurer and proposed modes and simulates
/// each. The drift-aware modes reprogram at their own tRPI; random
/// placement streams without reprogramming (its overhead column is what
/// reprogramming at its tRPI would cost).
pub fn compare_modes(
    ctx: &CompareContext<'_>,
    map_opts: &MapOptions,
    sim_opts: &SimOptions,
) -> Result<Comparison> {
    let mut modes = Vec::new();
    for mode in [MapMode::Random, MapMode::Endurer, MapMode::Proposed] {
        let opts = MapOptions { mode, ..*map_opts };
        let mapping = map_clusters(ctx.model, ctx.clustering, ctx.effective_eta, ctx.raw_eta, ctx.table, &opts)?;
        let k = auto_interval(mapping.trpi_inferences);
        let policy = if mode == MapMode::Random { ReprogramPolicy::Never } else { ReprogramPolicy::Every(k) };
        let sim = SimContext {
            model: ctx.model,
            dataset: ctx.dataset,
            mapping: &mapping,
            field: ctx.field,
            params: ctx.params,
            eta: ctx.eta,
            critical: Some(ctx.critical),
            cost: ctx.cost,
        };
        let report = run_simulation(&sim, &SimOptions { policy, ..*sim_opts })?;
        modes.push(ModeResult {
            mode,
            trpi_inferences: mapping.trpi_inferences,
            reprogram_every: k,
            trpt_seconds: report.trpt_seconds,
            overhead: report.trpt_seconds / (k as f64 * sim_opts.inference_period),
            reprogrammed: policy != ReprogramPolicy::Never,
            final_accuracy: report.final_accuracy,
            stream_accuracy: report.stream_accuracy,
            drift_events: report.drift_events,
            critical_drift_events: report.critical_drift_events,
        });
    }
    let overhead_of = |m: MapMode| modes.iter().find(|r| r.mode == m).map(|r| r.overhead).expect("mode ran");
    let overhead_reduction = 1.0 - overhead_of(MapMode::Proposed) / overhead_of(MapMode::Endurer);
    Ok(Comparison {
        modes,
        overhead_reduction,
    })
}
